#include <doctest.h>

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <stdexcept>

#include "cids/traffic.hpp"

using namespace cids;
using namespace cids::traffic;

namespace {

Ipv4 ip(const std::string& s) { return Ipv4::parse_or_throw(s); }

bool same_packet(const PacketRecord& a, const PacketRecord& b) {
    return a.ts == b.ts && a.proto == b.proto && a.src_ip == b.src_ip && a.dst_ip == b.dst_ip &&
           a.src_port == b.src_port && a.dst_port == b.dst_port && a.tcp_flags == b.tcp_flags &&
           a.icmp_type == b.icmp_type && a.payload == b.payload && a.label == b.label;
}

std::vector<netsim::Endpoint> lab_endpoints() {
    return {
        {"gateway", ip("192.168.1.1"), netsim::Role::gateway},
        {"node1", ip("192.168.1.101"), netsim::Role::sensor},
        {"node2", ip("192.168.1.102"), netsim::Role::sensor},
        {"node3", ip("192.168.1.103"), netsim::Role::sensor},
        {"central", ip("192.168.1.13"), netsim::Role::central},
        {"attacker", ip("192.168.1.66"), netsim::Role::attacker},
    };
}

}  // namespace

TEST_CASE("port scan walks targets outer, ports inner, one SYN per pair") {
    ScanSpec spec;
    spec.attack_id = "scan1";
    spec.src = ip("192.168.1.66");
    spec.targets = {ip("192.168.1.101"), ip("192.168.1.102")};
    spec.ports = {22, 80, 443};
    spec.rate = 1000;
    spec.start = 500;

    auto pkts = gen_port_scan(spec);
    REQUIRE(pkts.size() == 6);
    for (std::size_t k = 0; k < pkts.size(); ++k) {
        const auto& p = pkts[k];
        CHECK(p.ts == 500 + static_cast<Micros>(k) * 1000);  // 1000 pkt/s => 1 ms slots
        CHECK(p.proto == Proto::tcp);
        CHECK(p.src_ip == spec.src);
        CHECK(p.dst_ip == spec.targets[k / 3]);
        CHECK(p.dst_port == spec.ports[k % 3]);
        CHECK(p.src_port == 40000 + static_cast<int>(k));
        CHECK(p.tcp_flags == tcpflag::syn);
        CHECK(p.label.kind == AttackKind::port_scan);
        CHECK(p.label.attack_id == "scan1");
        CHECK(p.label.valid());
    }

    spec.ports.clear();
    CHECK(gen_port_scan(spec).empty());
    spec.ports = {80};
    spec.rate = 0;
    CHECK_THROWS_AS(gen_port_scan(spec), std::invalid_argument);
    spec.rate = 10;
    spec.targets.clear();
    CHECK_THROWS_AS(gen_port_scan(spec), std::invalid_argument);
}

TEST_CASE("icmp flood emits floor(rate*duration) echoes per target on shared slots") {
    FloodSpec spec;
    spec.attack_id = "flood1";
    spec.src = ip("192.168.1.66");
    spec.targets = {ip("192.168.1.101"), ip("192.168.1.103")};
    spec.rate = 1000;
    spec.duration_s = 0.25;

    auto pkts = gen_icmp_flood(spec);
    REQUIRE(pkts.size() == 500);  // 250 slots x 2 targets
    for (std::size_t i = 0; i < pkts.size(); i += 2) {
        CHECK(pkts[i].ts == pkts[i + 1].ts);  // parallel targets share the slot
        CHECK(pkts[i].ts == static_cast<Micros>(i / 2) * 1000);
        CHECK(pkts[i].dst_ip == spec.targets[0]);
        CHECK(pkts[i + 1].dst_ip == spec.targets[1]);
    }
    for (const auto& p : pkts) {
        CHECK(p.proto == Proto::icmp);
        CHECK(p.icmp_type == 8);
        CHECK(p.src_port == 0);
        CHECK(p.label.kind == AttackKind::icmp_flood);
        CHECK(p.label.attack_id == "flood1");
    }

    // Fractional products floor: 3 pkt/s for 1.5 s is 4 packets, not 5.
    spec.targets = {ip("192.168.1.101")};
    spec.rate = 3;
    spec.duration_s = 1.5;
    CHECK(gen_icmp_flood(spec).size() == 4);

    spec.icmp_type = 0;
    CHECK(gen_icmp_flood(spec)[0].icmp_type == 0);

    spec.duration_s = 0;
    CHECK_THROWS_AS(gen_icmp_flood(spec), std::invalid_argument);
}

TEST_CASE("dns probe payload layout keeps the rcode in byte 2") {
    CHECK(dns_query_payload(0, "a.test") == std::string("\x20\x20\x00"
                                                        "a.test",
                                                        9));
    CHECK(dns_response_payload(0, 3, "a.test") == std::string("\x20\x20\x03"
                                                              "a.test",
                                                              9));
    // id is rendered base-95 over printable chars, low digit first.
    CHECK(dns_query_payload(94, "x")[0] == '\x7e');
    CHECK(dns_query_payload(94, "x")[1] == '\x20');
    CHECK(dns_query_payload(95, "x")[0] == '\x20');
    CHECK(dns_query_payload(95, "x")[1] == '\x21');
    // Every payload byte except the rcode is printable ASCII.
    auto r = dns_response_payload(1234, 0, "probe.example.test");
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (i == 2) continue;
        CHECK(static_cast<unsigned char>(r[i]) >= 0x20);
        CHECK(static_cast<unsigned char>(r[i]) < 0x7f);
    }
}

TEST_CASE("dns enumeration pairs queries with delayed responses and salts NXDOMAIN") {
    DnsEnumSpec spec;
    spec.attack_id = "dnsenum1";
    spec.src = ip("192.168.1.66");
    spec.server = ip("192.168.1.1");
    spec.n_names = 40;
    spec.nx_fraction = 0.6;
    spec.rate = 50;
    spec.resp_delay = 1000;
    spec.seed = 99;

    auto pkts = gen_dns_enum(spec);
    REQUIRE(pkts.size() == 80);
    CHECK(std::is_sorted(pkts.begin(), pkts.end(),
                         [](const PacketRecord& a, const PacketRecord& b) { return a.ts < b.ts; }));

    std::map<std::uint16_t, const PacketRecord*> queries;
    int nx = 0;
    std::set<std::string> names;
    for (const auto& p : pkts) {
        CHECK(p.proto == Proto::udp);
        CHECK(p.label.kind == AttackKind::dns_enum);
        CHECK(p.label.attack_id == "dnsenum1");
        REQUIRE(p.payload.size() > 3);
        if (p.dst_port == 53) {  // query
            CHECK(p.src_ip == spec.src);
            CHECK(p.dst_ip == spec.server);
            CHECK(p.payload[2] == '\x00');
            queries[p.src_port] = &p;
            names.insert(p.payload.substr(3));
        } else {  // response
            CHECK(p.src_ip == spec.server);
            CHECK(p.dst_ip == spec.src);
            CHECK(p.src_port == 53);
            REQUIRE(queries.count(p.dst_port));
            const auto& q = *queries[p.dst_port];
            CHECK(p.ts == q.ts + spec.resp_delay);
            CHECK(p.payload.substr(3) == q.payload.substr(3));
            if (p.payload[2] == '\x03') ++nx;
            else CHECK(p.payload[2] == '\x00');
        }
    }
    CHECK(queries.size() == 40);
    CHECK(names.size() == 40);  // one unique name per probe
    CHECK(nx == 24);            // round(40 * 0.6)

    // Same seed replays the exact stream; a different seed moves the NX subset.
    auto again = gen_dns_enum(spec);
    REQUIRE(again.size() == pkts.size());
    for (std::size_t i = 0; i < pkts.size(); ++i) CHECK(same_packet(pkts[i], again[i]));
    spec.seed = 100;
    auto other = gen_dns_enum(spec);
    bool differs = false;
    for (std::size_t i = 0; i < pkts.size(); ++i)
        if (!same_packet(pkts[i], other[i])) differs = true;
    CHECK(differs);

    spec.nx_fraction = 1.0;
    for (const auto& p : gen_dns_enum(spec))
        if (p.src_port == 53) CHECK(p.payload[2] == '\x03');

    spec.n_names = 0;
    CHECK_THROWS_AS(gen_dns_enum(spec), std::invalid_argument);
    spec.n_names = 10;
    spec.nx_fraction = 1.5;
    CHECK_THROWS_AS(gen_dns_enum(spec), std::invalid_argument);
}

TEST_CASE("benign traffic stays on known hosts and ports with printable payloads") {
    BenignSpec spec;
    spec.rate = 200;
    spec.duration_s = 5;
    spec.seed = 7;
    auto endpoints = lab_endpoints();
    auto pkts = gen_benign(spec, endpoints);
    REQUIRE(pkts.size() == 1000);

    const Ipv4 attacker = ip("192.168.1.66");
    std::set<std::uint32_t> lan_ips;
    for (const auto& ep : endpoints) lan_ips.insert(ep.ip.addr);
    const std::set<std::uint16_t> tcp_ports = {22, 80, 443, 8080};
    const std::set<std::uint16_t> udp_ports = {53, 123, 161};

    for (std::size_t k = 0; k < pkts.size(); ++k) {
        const auto& p = pkts[k];
        CHECK(p.ts == static_cast<Micros>(std::llround(static_cast<double>(k) * 1e6 / 200)));
        CHECK(p.label.kind == AttackKind::benign);
        CHECK(p.label.attack_id.empty());
        CHECK(p.src_ip != attacker);
        CHECK(p.dst_ip != attacker);
        CHECK(p.src_ip != p.dst_ip);
        CHECK(lan_ips.count(p.src_ip.addr));
        CHECK(lan_ips.count(p.dst_ip.addr));
        if (p.proto == Proto::tcp) {
            CHECK(tcp_ports.count(p.dst_port));
            CHECK((p.tcp_flags == tcpflag::syn || p.tcp_flags == tcpflag::ack));
        } else if (p.proto == Proto::udp) {
            CHECK(udp_ports.count(p.dst_port));
        } else {
            CHECK((p.icmp_type == 8 || p.icmp_type == 0));
            CHECK(p.payload.empty());
        }
        for (char c : p.payload) {
            CHECK(static_cast<unsigned char>(c) >= 0x20);
            CHECK(static_cast<unsigned char>(c) < 0x7f);
        }
    }

    auto again = gen_benign(spec, endpoints);
    REQUIRE(again.size() == pkts.size());
    for (std::size_t i = 0; i < pkts.size(); ++i) CHECK(same_packet(pkts[i], again[i]));

    CHECK(gen_benign(BenignSpec{.rate = 0}, endpoints).empty());
    std::vector<netsim::Endpoint> tiny = {endpoints[0], endpoints[5]};  // gateway + attacker
    CHECK_THROWS_AS(gen_benign(spec, tiny), std::invalid_argument);
}

TEST_CASE("sub-threshold benign icmp never crosses the flood gate") {
    BenignSpec spec;
    spec.rate = 500;
    spec.duration_s = 4;
    spec.flood_count = 3;
    spec.flood_seconds = 1;
    spec.seed = 21;
    auto endpoints = lab_endpoints();

    // Oracle: per-destination sliding (t - S, t] window over emitted ICMP only.
    auto max_window = [&](const std::vector<PacketRecord>& pkts) {
        std::map<std::uint32_t, std::deque<Micros>> windows;
        int worst = 0;
        for (const auto& p : pkts) {
            if (p.proto != Proto::icmp) continue;
            auto& w = windows[p.dst_ip.addr];
            const Micros cutoff = p.ts - spec.flood_seconds * kMicrosPerSecond;
            while (!w.empty() && w.front() <= cutoff) w.pop_front();
            w.push_back(p.ts);
            worst = std::max(worst, static_cast<int>(w.size()));
        }
        return worst;
    };

    auto capped = gen_benign(spec, endpoints);
    CHECK(max_window(capped) <= spec.flood_count);
    // The cap had to bite: the raw mix would have exceeded it.
    spec.sub_threshold = false;
    auto raw = gen_benign(spec, endpoints);
    CHECK(max_window(raw) > spec.flood_count);
    // Flipped packets become TCP, so the stream sizes agree.
    CHECK(capped.size() == raw.size());
}

TEST_CASE("wan_fraction steers part of the stream at an off-subnet resolver") {
    BenignSpec spec;
    spec.rate = 100;
    spec.duration_s = 10;
    spec.wan_fraction = 0.5;
    spec.seed = 3;
    auto pkts = gen_benign(spec, lab_endpoints());
    REQUIRE(pkts.size() == 1000);

    const Ipv4 wan = ip("8.8.8.8");
    int wan_count = 0;
    for (const auto& p : pkts) {
        if (p.dst_ip == wan) {
            ++wan_count;
            CHECK(p.proto == Proto::udp);
            CHECK(p.dst_port == 53);
        }
    }
    CHECK(wan_count > 350);
    CHECK(wan_count < 650);

    spec.wan_fraction = 0.0;
    for (const auto& p : gen_benign(spec, lab_endpoints())) CHECK(p.dst_ip != wan);
}
