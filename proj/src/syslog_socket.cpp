#include "cids/syslog_socket.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "cids/errors.hpp"

namespace cids::syslog_socket {
namespace {

constexpr int kPollTimeoutMs = 50;

int make_socket(const ServerConfig& cfg, std::uint16_t& bound_port) {
    const int type = cfg.transport == syslog::Transport::tcp ? SOCK_STREAM : SOCK_DGRAM;
    int fd = ::socket(AF_INET, type, 0);
    if (fd < 0) throw ConfigError(std::string("socket: ") + std::strerror(errno));

    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(cfg.port);
    if (::inet_pton(AF_INET, cfg.bind_address.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw ConfigError("bad bind address: " + cfg.bind_address);
    }
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        int err = errno;
        ::close(fd);
        throw ConfigError(std::string("bind: ") + std::strerror(err));
    }
    sockaddr_in actual{};
    socklen_t len = sizeof(actual);
    if (::getsockname(fd, reinterpret_cast<sockaddr*>(&actual), &len) != 0) {
        int err = errno;
        ::close(fd);
        throw ConfigError(std::string("getsockname: ") + std::strerror(err));
    }
    bound_port = ntohs(actual.sin_port);
    return fd;
}

sockaddr_in remote_addr(const std::string& host, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        throw ConfigError("bad address: " + host);
    return addr;
}

bool wait_readable(int fd, const std::atomic<bool>& stopping) {
    while (!stopping.load()) {
        pollfd pfd{fd, POLLIN, 0};
        int n = ::poll(&pfd, 1, kPollTimeoutMs);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        if (n > 0 && (pfd.revents & (POLLIN | POLLHUP))) return true;
    }
    return false;
}

}  // namespace

void SyslogServer::start() {
    if (fd_ >= 0) return;
    fd_ = make_socket(cfg_, bound_port_);
    if (cfg_.transport == syslog::Transport::tcp && ::listen(fd_, 16) != 0) {
        int err = errno;
        ::close(fd_);
        fd_ = -1;
        throw ConfigError(std::string("listen: ") + std::strerror(err));
    }
    stopping_.store(false);
    started_ = std::chrono::steady_clock::now();
    worker_ = std::thread([this] {
        if (cfg_.transport == syslog::Transport::tcp) tcp_loop();
        else udp_loop();
    });
}

void SyslogServer::stop() {
    stopping_.store(true);
    if (worker_.joinable()) worker_.join();
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void SyslogServer::feed_message(const std::string& encoded) {
    const auto now = std::chrono::steady_clock::now();
    const Micros received_at =
        std::chrono::duration_cast<std::chrono::microseconds>(now - started_).count();
    try {
        syslog::SyslogMessage m = syslog::decode(encoded);
        std::lock_guard<std::mutex> lock(handler_mu_);
        ++received_;
        if (handler_) handler_(m, received_at);
    } catch (const CodecError&) {
        ++malformed_;
    }
}

void SyslogServer::feed_frame(const std::string& frame) {
    try {
        feed_message(syslog::tcp_unframe(frame));
    } catch (const CodecError&) {
        ++malformed_;
    }
}

void SyslogServer::tcp_loop() {
    std::vector<std::pair<int, std::string>> conns;  // fd, partial buffer
    char buf[4096];
    while (!stopping_.load()) {
        pollfd lfd{fd_, POLLIN, 0};
        if (::poll(&lfd, 1, 0) > 0 && (lfd.revents & POLLIN)) {
            int cfd = ::accept(fd_, nullptr, nullptr);
            if (cfd >= 0) conns.emplace_back(cfd, std::string());
        }
        bool idle = true;
        for (auto it = conns.begin(); it != conns.end();) {
            pollfd pfd{it->first, POLLIN, 0};
            if (::poll(&pfd, 1, 0) > 0 && (pfd.revents & (POLLIN | POLLHUP))) {
                ssize_t n = ::recv(it->first, buf, sizeof(buf), 0);
                if (n <= 0) {
                    ::close(it->first);
                    it = conns.erase(it);
                    continue;
                }
                idle = false;
                it->second.append(buf, static_cast<std::size_t>(n));
                std::size_t pos;
                while ((pos = it->second.find('\n')) != std::string::npos) {
                    feed_frame(it->second.substr(0, pos + 1));
                    it->second.erase(0, pos + 1);
                }
            }
            ++it;
        }
        if (idle) {
            pollfd pfd{fd_, POLLIN, 0};
            ::poll(&pfd, 1, kPollTimeoutMs);
        }
    }
    for (auto& [cfd, rest] : conns) {
        (void)rest;
        ::close(cfd);
    }
}

void SyslogServer::udp_loop() {
    char buf[65536];
    while (wait_readable(fd_, stopping_)) {
        ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
        if (n <= 0) continue;
        feed_message(std::string(buf, static_cast<std::size_t>(n)));
    }
}

void send_tcp(const std::string& host, std::uint16_t port, const std::vector<std::string>& frames) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw ConfigError(std::string("socket: ") + std::strerror(errno));
    sockaddr_in addr = remote_addr(host, port);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        int err = errno;
        ::close(fd);
        throw ConfigError(std::string("connect: ") + std::strerror(err));
    }
    for (const auto& frame : frames) {
        const char* p = frame.data();
        std::size_t left = frame.size();
        while (left > 0) {
            ssize_t n = ::send(fd, p, left, 0);
            if (n <= 0) {
                int err = errno;
                ::close(fd);
                throw ConfigError(std::string("send: ") + std::strerror(err));
            }
            p += n;
            left -= static_cast<std::size_t>(n);
        }
    }
    ::close(fd);
}

void send_udp(const std::string& host, std::uint16_t port, const std::string& datagram) {
    int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd < 0) throw ConfigError(std::string("socket: ") + std::strerror(errno));
    sockaddr_in addr = remote_addr(host, port);
    ssize_t n = ::sendto(fd, datagram.data(), datagram.size(), 0,
                         reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
    int err = errno;
    ::close(fd);
    if (n < 0) throw ConfigError(std::string("sendto: ") + std::strerror(err));
}

}  // namespace cids::syslog_socket
