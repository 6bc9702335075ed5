#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cids/net.hpp"
#include "cids/packet.hpp"
#include "cids/rules.hpp"

namespace cids::sensor {

// classtype -> alert priority. Unlisted classtypes get default_priority.
class ClasstypePriorityTable {
public:
    ClasstypePriorityTable() { table_["bad-unknown"] = 2; }

    void set(const std::string& classtype, int priority) { table_[classtype] = priority; }
    int priority_for(const std::string& classtype) const {
        auto it = table_.find(classtype);
        return it == table_.end() ? default_priority : it->second;
    }

    int default_priority = 2;

private:
    std::map<std::string, int> table_;
};

// One detection event. attack_label/pkt_seq exist for scoring only and never
// reach the syslog wire.
struct Alert {
    Micros ts = 0;
    std::string node;
    int gid = 1;
    int sid = 0;
    int rev = 0;
    std::string msg;
    std::optional<std::string> classtype;
    int priority = 2;
    Proto proto = Proto::tcp;
    Ipv4 src_ip;
    std::uint16_t src_port = 0;
    Ipv4 dst_ip;
    std::uint16_t dst_port = 0;
    GroundTruthLabel attack_label;
    std::int64_t pkt_seq = -1;
};

// Body text of an alert as it goes onto the wire:
//   [gid:sid:rev] "msg" {PROTO} src -> dst
// src/dst carry ":port" iff the protocol has ports (TCP/UDP). When a classtype
// is set, ` [Classification: <c>] [Priority: <p>]` follows the quoted msg.
std::string format_alert(const Alert& a);

struct SensorConfig {
    netsim::Endpoint node;
    bool promiscuous = true;  // effective only on a hub LAN
    int syslog_facility = 23;  // local7
    int syslog_severity = 1;   // alert
    Ipv4 forward_to;
};

// Per-node IDS engine. Owns the detection_filter state for every rule with a
// threshold; rules evaluate independently, so one packet may yield several
// alerts (ruleset order).
class Sensor {
public:
    Sensor(SensorConfig cfg, const rules::Ruleset& ruleset,
           const ClasstypePriorityTable& priorities)
        : cfg_(std::move(cfg)), ruleset_(&ruleset), priorities_(&priorities),
          filter_states_(ruleset.size()) {}

    const SensorConfig& config() const { return cfg_; }
    const std::string& name() const { return cfg_.node.name; }

    // pkt was delivered to this node by the LAN. In switched mode that already
    // means dst == node ip; on a hub the sensor inspects foreign packets only
    // when promiscuous.
    std::vector<Alert> process(const PacketRecord& pkt, std::int64_t pkt_seq,
                               netsim::LanMode lan_mode);

    std::uint64_t packets_seen() const { return packets_seen_; }
    std::uint64_t alerts_emitted() const { return alerts_emitted_; }

private:
    SensorConfig cfg_;
    const rules::Ruleset* ruleset_;
    const ClasstypePriorityTable* priorities_;
    std::vector<rules::DetectionFilterState> filter_states_;  // parallel to ruleset
    std::uint64_t packets_seen_ = 0;
    std::uint64_t alerts_emitted_ = 0;
};

}  // namespace cids::sensor
