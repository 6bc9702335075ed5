#include <doctest.h>

#include <chrono>
#include <mutex>
#include <thread>
#include <vector>

#include "cids/syslog_socket.hpp"

using namespace cids;
using namespace cids::syslog;
using namespace cids::syslog_socket;

namespace {

bool wait_until(const std::function<bool()>& done, int timeout_ms = 2000) {
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (std::chrono::steady_clock::now() < deadline) {
        if (done()) return true;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return done();
}

SyslogMessage sample(const std::string& body, int pid) {
    SyslogMessage m;
    m.timestamp_s = 42;
    m.hostname = "node1";
    m.tag = "snort";
    m.pid = pid;
    m.body = body;
    return m;
}

}  // namespace

TEST_CASE("tcp loopback server reassembles frames across one connection") {
    std::mutex mu;
    std::vector<SyslogMessage> got;
    ServerConfig cfg;
    cfg.port = 0;  // let the kernel pick
    SyslogServer server(cfg, [&](const SyslogMessage& m, Micros) {
        std::lock_guard<std::mutex> lock(mu);
        got.push_back(m);
    });
    server.start();
    REQUIRE(server.port() != 0);

    std::vector<std::string> frames = {
        tcp_frame(encode(sample("first", 1))),
        tcp_frame(encode(sample("body with \\escape material", 2))),
        tcp_frame(encode(sample("third", 3))),
    };
    send_tcp("127.0.0.1", server.port(), frames);

    REQUIRE(wait_until([&] { return server.received() == 3; }));
    server.stop();
    std::lock_guard<std::mutex> lock(mu);
    REQUIRE(got.size() == 3);
    CHECK(got[0].body == "first");
    CHECK(got[1].body == "body with \\escape material");
    CHECK(got[2].body == "third");
}

TEST_CASE("udp loopback server takes one message per datagram and counts junk") {
    ServerConfig cfg;
    cfg.port = 0;
    cfg.transport = Transport::udp;
    std::mutex mu;
    std::vector<std::string> bodies;
    SyslogServer server(cfg, [&](const SyslogMessage& m, Micros) {
        std::lock_guard<std::mutex> lock(mu);
        bodies.push_back(m.body);
    });
    server.start();

    send_udp("127.0.0.1", server.port(), encode(sample("datagram one", 9)));
    send_udp("127.0.0.1", server.port(), "definitely not syslog");
    send_udp("127.0.0.1", server.port(), encode(sample("datagram two", 9)));

    REQUIRE(wait_until([&] { return server.received() + server.malformed() == 3; }));
    server.stop();
    CHECK(server.received() == 2);
    CHECK(server.malformed() == 1);
}

TEST_CASE("server rejects an unusable bind address") {
    ServerConfig cfg;
    cfg.bind_address = "999.0.0.1";
    SyslogServer server(cfg, nullptr);
    CHECK_THROWS_AS(server.start(), ConfigError);
}
