#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cids/net.hpp"
#include "cids/packet.hpp"

namespace cids::traffic {

// All generators are pure functions of (spec, seed): same inputs, same stream.
// Timestamps are non-decreasing; the k-th event of a rate-r stream lands at
// start + round(k * 1e6 / r) microseconds.

struct ScanSpec {
    std::string attack_id;
    Ipv4 src;
    std::vector<Ipv4> targets;
    std::vector<std::uint16_t> ports;
    double rate = 1000;  // packets/second
    Micros start = 0;
};

// One TCP SYN per (target, port), targets outer, ports inner. Empty port list
// gives an empty stream.
std::vector<PacketRecord> gen_port_scan(const ScanSpec& spec);

struct FloodSpec {
    std::string attack_id;
    Ipv4 src;
    std::vector<Ipv4> targets;
    double rate = 1000;
    double duration_s = 60;
    Micros start = 0;
    int icmp_type = 8;  // echo request
};

// floor(rate * duration) echo requests per target, first at t=start; parallel
// targets share each timestamp slot.
std::vector<PacketRecord> gen_icmp_flood(const FloodSpec& spec);

// DNS probe payload layout (fixed, minimal): byte 0-1 = query id rendered as
// two printable chars (0x20 + v%95, 0x20 + v/95%95), byte 2 = rcode (0x00, or
// 0x03 for NXDOMAIN responses), bytes 3.. = ASCII query name. A rule matching
// content:"|03|" therefore hits exactly the NXDOMAIN responses.
std::string dns_query_payload(int id, const std::string& name);
std::string dns_response_payload(int id, int rcode, const std::string& name);

struct DnsEnumSpec {
    std::string attack_id;
    Ipv4 src;          // the enumerating attacker
    Ipv4 server;       // DNS server answering the probes
    int n_names = 100;
    double nx_fraction = 0.9;
    double rate = 50;  // query pairs/second
    Micros start = 0;
    Micros resp_delay = 1000;  // response lag per probe
    std::uint64_t seed = 0;
};

// One UDP query + one UDP response per probed name; round(n * nx_fraction)
// responses carry NXDOMAIN, the subset chosen by seeded shuffle.
std::vector<PacketRecord> gen_dns_enum(const DnsEnumSpec& spec);

struct BenignSpec {
    double rate = 10;
    double duration_s = 60;
    Micros start = 0;
    bool sub_threshold = true;  // keep per-dst ICMP under the flood threshold
    int flood_count = 150;
    int flood_seconds = 3;
    double wan_fraction = 0.0;  // share of packets aimed at an off-LAN host
    std::uint64_t seed = 0;
};

// Background TCP/UDP/ICMP mix between non-attacker LAN endpoints, printable
// payloads, all labeled benign. With sub_threshold, an ICMP packet that would
// push any destination's count over flood_count per flood_seconds window is
// emitted as TCP instead.
std::vector<PacketRecord> gen_benign(const BenignSpec& spec,
                                     const std::vector<netsim::Endpoint>& endpoints);

}  // namespace cids::traffic
