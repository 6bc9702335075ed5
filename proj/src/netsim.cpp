#include "cids/net.hpp"

namespace cids::netsim {

const char* role_name(Role r) {
    switch (r) {
        case Role::sensor: return "sensor";
        case Role::central: return "central";
        case Role::attacker: return "attacker";
        case Role::siem: return "siem";
        case Role::gateway: return "gateway";
    }
    return "?";
}

std::optional<Role> role_from_name(const std::string& s) {
    if (s == "sensor") return Role::sensor;
    if (s == "central") return Role::central;
    if (s == "attacker") return Role::attacker;
    if (s == "siem") return Role::siem;
    if (s == "gateway") return Role::gateway;
    return std::nullopt;
}

void LanSegment::add_endpoint(Endpoint ep) {
    if (find_by_name(ep.name))
        throw ConfigError("duplicate endpoint name \"" + ep.name + "\"");
    if (find_by_ip(ep.ip))
        throw ConfigError("duplicate endpoint ip " + ep.ip.str());
    // LAN roles must live inside the segment's subnet.
    bool lan_role = ep.role == Role::sensor || ep.role == Role::central || ep.role == Role::attacker ||
                    ep.role == Role::gateway;
    if (lan_role && !on_subnet(ep.ip))
        throw ConfigError("endpoint \"" + ep.name + "\" ip " + ep.ip.str() + " outside LAN subnet");
    auto pos = std::lower_bound(endpoints_.begin(), endpoints_.end(), ep.name,
                                [](const Endpoint& e, const std::string& n) { return e.name < n; });
    endpoints_.insert(pos, std::move(ep));
}

const Endpoint* LanSegment::find_by_name(const std::string& name) const {
    auto it = std::lower_bound(endpoints_.begin(), endpoints_.end(), name,
                               [](const Endpoint& e, const std::string& n) { return e.name < n; });
    if (it != endpoints_.end() && it->name == name) return &*it;
    return nullptr;
}

const Endpoint* LanSegment::find_by_ip(Ipv4 ip) const {
    for (const auto& e : endpoints_) {
        if (e.ip == ip) return &e;
    }
    return nullptr;
}

std::vector<const Endpoint*> LanSegment::deliver(const PacketRecord& pkt) const {
    std::vector<const Endpoint*> out;
    if (mode_ == LanMode::switched) {
        if (const Endpoint* dst = find_by_ip(pkt.dst_ip)) out.push_back(dst);
        return out;
    }
    // hub: every endpoint except the sender sees the frame
    for (const auto& e : endpoints_) {
        if (e.ip != pkt.src_ip) out.push_back(&e);
    }
    return out;
}

bool FirewallPolicy::rule_matches(const EgressRule& rule, const PacketRecord& pkt) const {
    if (rule.port != 0 && rule.port != pkt.dst_port) return false;
    if (rule.host == "*") return true;
    for (const auto& wh : wan_hosts_) {
        if (wh.name == rule.host) return pkt.dst_ip == wh.ip;
    }
    auto slash = rule.host.find('/');
    if (slash != std::string::npos) {
        auto base = Ipv4::parse(rule.host.substr(0, slash));
        int prefix = 0;
        try {
            prefix = std::stoi(rule.host.substr(slash + 1));
        } catch (...) {
            return false;
        }
        return base && pkt.dst_ip.in_subnet(*base, prefix);
    }
    auto ip = Ipv4::parse(rule.host);
    return ip && pkt.dst_ip == *ip;
}

FirewallPolicy::Verdict FirewallPolicy::egress_check(const PacketRecord& pkt) {
    for (const auto& rule : allow_) {
        if (rule_matches(rule, pkt)) {
            ++allowed_;
            return Verdict::allow;
        }
    }
    drops_.push_back(
        DropRecord{pkt.ts, pkt.proto, pkt.src_ip, pkt.src_port, pkt.dst_ip, pkt.dst_port});
    return Verdict::drop;
}

}  // namespace cids::netsim
