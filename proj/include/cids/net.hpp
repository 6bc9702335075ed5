#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "cids/errors.hpp"
#include "cids/packet.hpp"
#include "cids/vtime.hpp"

namespace cids::netsim {

enum class Role { sensor, central, attacker, siem, gateway };

const char* role_name(Role r);
std::optional<Role> role_from_name(const std::string& s);

struct Endpoint {
    std::string name;
    Ipv4 ip;
    Role role = Role::sensor;
};

enum class LanMode { switched, hub };

// One broadcast domain. In switched mode a unicast packet reaches only its
// destination endpoint; in hub mode every endpoint except the sender sees it.
class LanSegment {
public:
    LanSegment(LanMode mode, Micros latency_us, Ipv4 subnet_base, int subnet_prefix)
        : mode_(mode), latency_(latency_us), subnet_base_(subnet_base), subnet_prefix_(subnet_prefix) {}

    void add_endpoint(Endpoint ep);

    LanMode mode() const { return mode_; }
    Micros latency() const { return latency_; }
    const std::vector<Endpoint>& endpoints() const { return endpoints_; }

    const Endpoint* find_by_name(const std::string& name) const;
    const Endpoint* find_by_ip(Ipv4 ip) const;
    bool on_subnet(Ipv4 ip) const { return ip.in_subnet(subnet_base_, subnet_prefix_); }

    // Receivers of one unicast packet, ordered by endpoint name. Empty when the
    // destination is absent (switched) or the sender is alone on the wire (hub).
    std::vector<const Endpoint*> deliver(const PacketRecord& pkt) const;

private:
    LanMode mode_;
    Micros latency_;
    Ipv4 subnet_base_;
    int subnet_prefix_;
    std::vector<Endpoint> endpoints_;  // kept sorted by name
};

// Egress allow entry: destination host (a named WAN host, an address, a CIDR
// block, or "*") plus destination port (0 = any port).
struct EgressRule {
    std::string host;
    std::uint16_t port = 0;
};

struct WanHost {
    std::string name;
    Ipv4 ip;
};

struct DropRecord {
    Micros ts;
    Proto proto;
    Ipv4 src_ip;
    std::uint16_t src_port;
    Ipv4 dst_ip;
    std::uint16_t dst_port;
};

// Default-deny egress policy for traffic leaving the LAN. First matching allow
// entry forwards the packet; everything else is dropped and logged.
class FirewallPolicy {
public:
    FirewallPolicy() = default;
    FirewallPolicy(std::vector<EgressRule> allow, std::vector<WanHost> wan_hosts)
        : allow_(std::move(allow)), wan_hosts_(std::move(wan_hosts)) {}

    enum class Verdict { allow, drop };

    Verdict egress_check(const PacketRecord& pkt);

    std::uint64_t drop_count() const { return drops_.size(); }
    std::uint64_t allow_count() const { return allowed_; }
    const std::vector<DropRecord>& drop_log() const { return drops_; }

private:
    bool rule_matches(const EgressRule& rule, const PacketRecord& pkt) const;

    std::vector<EgressRule> allow_;
    std::vector<WanHost> wan_hosts_;
    std::vector<DropRecord> drops_;
    std::uint64_t allowed_ = 0;
};

// Deterministic single-threaded event loop. Events carry an arbitrary payload;
// dispatch order is (due time, sender name, schedule sequence).
template <class Payload>
class EventLoop {
public:
    struct Event {
        Micros due;
        std::string sender;
        std::uint64_t seq;
        Payload payload;
    };

    Micros now() const { return clock_.now(); }
    const VirtualClock& clock() const { return clock_; }
    bool empty() const { return heap_.empty(); }
    std::size_t pending() const { return heap_.size(); }

    void schedule(Micros due, std::string sender, Payload payload) {
        if (due < clock_.now())
            throw InvariantError("EventLoop::schedule: event due in the past");
        heap_.push(Event{due, std::move(sender), next_seq_++, std::move(payload)});
    }

    // Advance the clock by dt and return every event due in (now, now+dt],
    // already ordered. Events scheduled by the caller while processing the
    // returned batch surface on the next call.
    std::vector<Event> advance(Micros dt) {
        if (dt <= 0) throw std::invalid_argument("EventLoop::advance: dt must be > 0");
        Micros deadline = clock_.now() + dt;
        std::vector<Event> due;
        while (!heap_.empty() && heap_.top().due <= deadline) {
            due.push_back(heap_.top());
            heap_.pop();
        }
        clock_.seek(deadline);
        return due;
    }

    // Pop the earliest event, moving the clock to its due time. The usual way
    // to drain the queue when handlers schedule follow-up events.
    std::optional<Event> step() {
        if (heap_.empty()) return std::nullopt;
        Event ev = heap_.top();
        heap_.pop();
        clock_.seek(ev.due);
        return ev;
    }

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.due != b.due) return a.due > b.due;
            if (a.sender != b.sender) return a.sender > b.sender;
            return a.seq > b.seq;
        }
    };

    VirtualClock clock_;
    std::uint64_t next_seq_ = 0;
    std::priority_queue<Event, std::vector<Event>, Later> heap_;
};

}  // namespace cids::netsim
