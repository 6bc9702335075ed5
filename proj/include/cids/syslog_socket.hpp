#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "cids/syslog.hpp"

namespace cids::syslog_socket {

struct ServerConfig {
    std::string bind_address = "127.0.0.1";
    std::uint16_t port = 5514;  // 0 picks a free port
    syslog::Transport transport = syslog::Transport::tcp;
};

// Loopback syslog intake over real POSIX sockets, for wiring the pipeline to
// actual senders. TCP connections carry newline-terminated frames; UDP
// datagrams carry one bare encoded message each. Handlers run serialized on
// the server threads; received_at is microseconds since start().
class SyslogServer {
public:
    using Handler = std::function<void(const syslog::SyslogMessage&, Micros received_at)>;

    SyslogServer(ServerConfig cfg, Handler handler)
        : cfg_(std::move(cfg)), handler_(std::move(handler)) {}
    ~SyslogServer() { stop(); }

    SyslogServer(const SyslogServer&) = delete;
    SyslogServer& operator=(const SyslogServer&) = delete;

    void start();  // binds and spawns the intake thread; ConfigError on failure
    void stop();   // idempotent

    std::uint16_t port() const { return bound_port_; }
    std::uint64_t received() const { return received_.load(); }
    std::uint64_t malformed() const { return malformed_.load(); }

private:
    void tcp_loop();
    void udp_loop();
    void feed_frame(const std::string& frame);
    void feed_message(const std::string& encoded);

    ServerConfig cfg_;
    Handler handler_;
    int fd_ = -1;
    std::uint16_t bound_port_ = 0;
    std::thread worker_;
    std::atomic<bool> stopping_{false};
    std::atomic<std::uint64_t> received_{0};
    std::atomic<std::uint64_t> malformed_{0};
    std::mutex handler_mu_;
    std::chrono::steady_clock::time_point started_;
};

// One-shot client helpers; each call opens and closes its own socket.
void send_tcp(const std::string& host, std::uint16_t port, const std::vector<std::string>& frames);
void send_udp(const std::string& host, std::uint16_t port, const std::string& datagram);

}  // namespace cids::syslog_socket
