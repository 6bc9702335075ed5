#include "cids/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <map>
#include <numeric>
#include <stdexcept>

namespace cids::traffic {
namespace {

Micros slot(Micros start, std::int64_t k, double rate) {
    return start + static_cast<Micros>(std::llround(static_cast<double>(k) * 1e6 / rate));
}

std::int64_t stream_count(double rate, double duration_s) {
    return static_cast<std::int64_t>(std::floor(rate * duration_s + 1e-9));
}

// rng() % n is biased but deterministic everywhere, which is what matters here.
std::uint64_t pick(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

constexpr char kPayloadChars[] =
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 ._-/";

std::string random_payload(std::mt19937_64& rng, std::size_t max_len) {
    std::size_t len = pick(rng, max_len + 1);
    std::string out;
    out.reserve(len);
    for (std::size_t i = 0; i < len; ++i)
        out.push_back(kPayloadChars[pick(rng, sizeof(kPayloadChars) - 1)]);
    return out;
}

}  // namespace

std::vector<PacketRecord> gen_port_scan(const ScanSpec& spec) {
    if (spec.rate <= 0) throw std::invalid_argument("gen_port_scan: rate must be > 0");
    if (spec.targets.empty()) throw std::invalid_argument("gen_port_scan: targets empty");
    std::vector<PacketRecord> out;
    out.reserve(spec.targets.size() * spec.ports.size());
    std::int64_t k = 0;
    for (Ipv4 target : spec.targets) {
        for (std::uint16_t port : spec.ports) {
            PacketRecord p;
            p.ts = slot(spec.start, k, spec.rate);
            p.proto = Proto::tcp;
            p.src_ip = spec.src;
            p.dst_ip = target;
            p.src_port = static_cast<std::uint16_t>(40000 + k % 20000);
            p.dst_port = port;
            p.tcp_flags = tcpflag::syn;
            p.label = {AttackKind::port_scan, spec.attack_id};
            out.push_back(std::move(p));
            ++k;
        }
    }
    return out;
}

std::vector<PacketRecord> gen_icmp_flood(const FloodSpec& spec) {
    if (spec.rate <= 0) throw std::invalid_argument("gen_icmp_flood: rate must be > 0");
    if (spec.duration_s <= 0) throw std::invalid_argument("gen_icmp_flood: duration must be > 0");
    if (spec.targets.empty()) throw std::invalid_argument("gen_icmp_flood: targets empty");
    const std::int64_t per_target = stream_count(spec.rate, spec.duration_s);
    std::vector<PacketRecord> out;
    out.reserve(static_cast<std::size_t>(per_target) * spec.targets.size());
    for (std::int64_t k = 0; k < per_target; ++k) {
        const Micros ts = slot(spec.start, k, spec.rate);
        for (Ipv4 target : spec.targets) {
            PacketRecord p;
            p.ts = ts;
            p.proto = Proto::icmp;
            p.src_ip = spec.src;
            p.dst_ip = target;
            p.icmp_type = spec.icmp_type;
            p.label = {AttackKind::icmp_flood, spec.attack_id};
            out.push_back(std::move(p));
        }
    }
    return out;
}

std::string dns_query_payload(int id, const std::string& name) {
    return dns_response_payload(id, 0, name);
}

std::string dns_response_payload(int id, int rcode, const std::string& name) {
    std::string out;
    out.reserve(3 + name.size());
    out.push_back(static_cast<char>(0x20 + id % 95));
    out.push_back(static_cast<char>(0x20 + (id / 95) % 95));
    out.push_back(static_cast<char>(rcode));
    out += name;
    return out;
}

std::vector<PacketRecord> gen_dns_enum(const DnsEnumSpec& spec) {
    if (spec.n_names < 1) throw std::invalid_argument("gen_dns_enum: n_names must be >= 1");
    if (spec.rate <= 0) throw std::invalid_argument("gen_dns_enum: rate must be > 0");
    if (spec.nx_fraction < 0 || spec.nx_fraction > 1)
        throw std::invalid_argument("gen_dns_enum: nx_fraction must be in [0,1]");

    const int nx_count = static_cast<int>(std::llround(spec.n_names * spec.nx_fraction));
    std::vector<int> order(static_cast<std::size_t>(spec.n_names));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(spec.seed);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[pick(rng, i)]);
    std::vector<bool> is_nx(static_cast<std::size_t>(spec.n_names), false);
    for (int i = 0; i < nx_count; ++i) is_nx[static_cast<std::size_t>(order[i])] = true;

    std::vector<PacketRecord> out;
    out.reserve(static_cast<std::size_t>(spec.n_names) * 2);
    for (int k = 0; k < spec.n_names; ++k) {
        char name[48];
        std::snprintf(name, sizeof(name), "probe%05d.example.test", k);
        const Micros ts = slot(spec.start, k, spec.rate);
        const auto sport = static_cast<std::uint16_t>(33000 + k % 20000);

        PacketRecord query;
        query.ts = ts;
        query.proto = Proto::udp;
        query.src_ip = spec.src;
        query.dst_ip = spec.server;
        query.src_port = sport;
        query.dst_port = 53;
        query.payload = dns_query_payload(k, name);
        query.label = {AttackKind::dns_enum, spec.attack_id};
        out.push_back(std::move(query));

        PacketRecord resp;
        resp.ts = ts + spec.resp_delay;
        resp.proto = Proto::udp;
        resp.src_ip = spec.server;
        resp.dst_ip = spec.src;
        resp.src_port = 53;
        resp.dst_port = sport;
        resp.payload = dns_response_payload(k, is_nx[static_cast<std::size_t>(k)] ? 3 : 0, name);
        resp.label = {AttackKind::dns_enum, spec.attack_id};
        out.push_back(std::move(resp));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const PacketRecord& a, const PacketRecord& b) { return a.ts < b.ts; });
    return out;
}

std::vector<PacketRecord> gen_benign(const BenignSpec& spec,
                                     const std::vector<netsim::Endpoint>& endpoints) {
    if (spec.rate < 0) throw std::invalid_argument("gen_benign: rate must be >= 0");
    const std::int64_t n = spec.rate == 0 ? 0 : stream_count(spec.rate, spec.duration_s);
    if (n == 0) return {};

    std::vector<const netsim::Endpoint*> hosts;
    for (const auto& ep : endpoints)
        if (ep.role != netsim::Role::attacker) hosts.push_back(&ep);
    if (hosts.size() < 2) throw std::invalid_argument("gen_benign: need >= 2 non-attacker hosts");

    std::mt19937_64 rng(spec.seed);
    const Ipv4 wan_dst = Ipv4::parse_or_throw("8.8.8.8");
    constexpr std::uint16_t kTcpPorts[] = {22, 80, 443, 8080};
    constexpr std::uint16_t kUdpPorts[] = {53, 123, 161};
    std::map<std::uint32_t, std::deque<Micros>> icmp_windows;

    std::vector<PacketRecord> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::int64_t k = 0; k < n; ++k) {
        PacketRecord p;
        p.ts = slot(spec.start, k, spec.rate);
        p.label = {AttackKind::benign, ""};

        const bool wan = spec.wan_fraction > 0 &&
                         static_cast<double>(rng() >> 11) * 0x1.0p-53 < spec.wan_fraction;
        const auto* src = hosts[pick(rng, hosts.size())];
        p.src_ip = src->ip;
        if (wan) {
            p.proto = Proto::udp;
            p.dst_ip = wan_dst;
            p.src_port = static_cast<std::uint16_t>(1024 + pick(rng, 64512));
            p.dst_port = 53;
            p.payload = random_payload(rng, 32);
            out.push_back(std::move(p));
            continue;
        }

        const netsim::Endpoint* dst = src;
        while (dst == src) dst = hosts[pick(rng, hosts.size())];
        p.dst_ip = dst->ip;

        std::uint64_t roll = pick(rng, 10);  // 0-5 tcp, 6-8 udp, 9 icmp
        if (roll >= 9 && spec.sub_threshold) {
            auto& window = icmp_windows[p.dst_ip.addr];
            const Micros cutoff =
                p.ts - static_cast<Micros>(spec.flood_seconds) * kMicrosPerSecond;
            while (!window.empty() && window.front() <= cutoff) window.pop_front();
            if (static_cast<int>(window.size()) + 1 > spec.flood_count) roll = 0;  // flip to tcp
            else window.push_back(p.ts);
        }

        if (roll >= 9) {
            p.proto = Proto::icmp;
            p.icmp_type = pick(rng, 2) == 0 ? 8 : 0;
        } else if (roll >= 6) {
            p.proto = Proto::udp;
            p.src_port = static_cast<std::uint16_t>(1024 + pick(rng, 64512));
            p.dst_port = kUdpPorts[pick(rng, std::size(kUdpPorts))];
            p.payload = random_payload(rng, 32);
        } else {
            p.proto = Proto::tcp;
            p.src_port = static_cast<std::uint16_t>(1024 + pick(rng, 64512));
            p.dst_port = kTcpPorts[pick(rng, std::size(kTcpPorts))];
            p.tcp_flags = pick(rng, 2) == 0 ? static_cast<std::uint8_t>(tcpflag::syn)
                                            : static_cast<std::uint8_t>(tcpflag::ack);
            p.payload = random_payload(rng, 32);
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace cids::traffic
