#include "cids/sensor.hpp"

namespace cids::sensor {

std::string format_alert(const Alert& a) {
    std::string out = "[" + std::to_string(a.gid) + ":" + std::to_string(a.sid) + ":" +
                      std::to_string(a.rev) + "] \"" + a.msg + "\"";
    if (a.classtype)
        out += " [Classification: " + *a.classtype + "] [Priority: " +
               std::to_string(a.priority) + "]";
    out += " {";
    out += proto_name(a.proto);
    out += "} ";
    const bool ports = a.proto != Proto::icmp;
    out += a.src_ip.str();
    if (ports) out += ":" + std::to_string(a.src_port);
    out += " -> ";
    out += a.dst_ip.str();
    if (ports) out += ":" + std::to_string(a.dst_port);
    return out;
}

std::vector<Alert> Sensor::process(const PacketRecord& pkt, std::int64_t pkt_seq,
                                   netsim::LanMode lan_mode) {
    if (pkt.dst_ip != cfg_.node.ip) {
        // Foreign packet: only visible on a hub, and only inspected when the
        // sensor runs promiscuous.
        if (lan_mode != netsim::LanMode::hub || !cfg_.promiscuous) return {};
    }
    ++packets_seen_;

    std::vector<Alert> alerts;
    const auto& rs = ruleset_->rules;
    for (std::size_t i = 0; i < rs.size(); ++i) {
        const auto& rule = rs[i];
        if (!rules::match_packet(rule, pkt)) continue;
        if (rule.filter) {
            Ipv4 key = rule.filter->track == rules::DetectionFilterSpec::Track::by_src
                           ? pkt.src_ip
                           : pkt.dst_ip;
            if (!filter_states_[i].decide(*rule.filter, key, pkt.ts)) continue;
        }
        Alert a;
        a.ts = pkt.ts;
        a.node = cfg_.node.name;
        a.gid = rule.gid;
        a.sid = rule.sid;
        a.rev = rule.rev;
        a.msg = rule.msg;
        a.classtype = rule.classtype;
        a.priority = rule.classtype ? priorities_->priority_for(*rule.classtype)
                                    : priorities_->default_priority;
        a.proto = pkt.proto;
        a.src_ip = pkt.src_ip;
        a.src_port = pkt.src_port;
        a.dst_ip = pkt.dst_ip;
        a.dst_port = pkt.dst_port;
        a.attack_label = pkt.label;
        a.pkt_seq = pkt_seq;
        alerts.push_back(std::move(a));
    }
    alerts_emitted_ += alerts.size();
    return alerts;
}

}  // namespace cids::sensor
