#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>

#include "cids/errors.hpp"
#include "cids/packet.hpp"
#include "cids/vtime.hpp"

namespace cids::syslog {

// RFC 3164-shaped message: <PRI>Mmm dd hh:mm:ss HOSTNAME TAG[PID]: BODY
// Timestamps carry whole seconds (the wire format has no sub-second field).
// encode/decode are inverse for every valid message whose body does not end in
// a newline and whose timestamp lies inside one virtual year.
struct SyslogMessage {
    int facility = 23;  // 0..23, local7
    int severity = 1;   // 0..7, alert
    std::int64_t timestamp_s = 0;
    std::string hostname;
    std::string tag;  // [A-Za-z0-9_.-]+, no ':'
    std::optional<int> pid;
    std::string body;

    friend bool operator==(const SyslogMessage&, const SyslogMessage&) = default;
};

inline int pri_value(const SyslogMessage& m) { return m.facility * 8 + m.severity; }

// Throws CodecError on out-of-range fields, bad tag/hostname characters, or a
// NUL byte in the body. Output carries no trailing newline.
std::string encode(const SyslogMessage& m);

// Inverse of encode; tolerates one trailing newline. Throws CodecError on
// anything else malformed (missing <PRI>, PRI > 191, bad timestamp, ...).
SyslogMessage decode(const std::string& bytes);

// Non-transparent TCP framing: one message per '\n'-terminated frame, with
// '\' and '\n' inside the encoded message escaped so bodies may span lines.
std::string tcp_frame(const std::string& encoded);
std::string tcp_unframe(const std::string& frame);

enum class Transport { tcp, udp };

const char* transport_name(Transport t);
std::optional<Transport> transport_from_name(const std::string& s);

struct RateLimitSpec {
    std::int64_t interval_s = 1;
    int burst = 1;
};

struct ForwarderConfig {
    Ipv4 dest_ip;
    Transport transport = Transport::tcp;
    std::uint16_t port = 514;
    std::optional<RateLimitSpec> rate_limit;
    double udp_drop_prob = 0.0;  // udp transport only
    std::string hostname;        // this node
    std::string tag = "snort";
    int pid = 0;
    int facility = 23;
    int severity = 1;
};

// Per-node rsyslog-like forwarder. Wraps an alert body into a SyslogMessage,
// applies rate limiting over fixed windows aligned at t=0 (at most `burst`
// sends per `interval_s` window), and returns the wire frame, or nullopt when
// the message is dropped. Drops are accounted, never raised.
class Forwarder {
public:
    Forwarder(ForwarderConfig cfg, std::uint64_t seed);

    std::optional<std::string> forward(const std::string& body, Micros now);

    const ForwarderConfig& config() const { return cfg_; }
    std::uint64_t offered() const { return offered_; }
    std::uint64_t sent() const { return sent_; }
    std::uint64_t dropped() const { return rate_dropped_ + udp_lost_; }
    std::uint64_t rate_dropped() const { return rate_dropped_; }
    std::uint64_t udp_lost() const { return udp_lost_; }

private:
    ForwarderConfig cfg_;
    std::mt19937_64 rng_;
    std::int64_t window_ = -1;
    int in_window_ = 0;
    std::uint64_t offered_ = 0;
    std::uint64_t sent_ = 0;
    std::uint64_t rate_dropped_ = 0;
    std::uint64_t udp_lost_ = 0;
};

// Central syslog intake: unframes/decodes and hands each message to the
// registered handlers in order (store insert first, then SIEM shipping).
class CentralReceiver {
public:
    using Handler = std::function<void(const SyslogMessage&, Micros received_at)>;

    void add_handler(Handler h) { handlers_.push_back(std::move(h)); }

    void receive_frame(const std::string& bytes, Micros received_at, Transport transport);

    std::uint64_t received() const { return received_; }
    std::uint64_t malformed() const { return malformed_; }

private:
    std::vector<Handler> handlers_;
    std::uint64_t received_ = 0;
    std::uint64_t malformed_ = 0;
};

}  // namespace cids::syslog
