#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "cids/vtime.hpp"

#include <nlohmann/json_fwd.hpp>

namespace cids {

// Dotted-quad IPv4 address, host byte order.
struct Ipv4 {
    std::uint32_t addr = 0;

    static std::optional<Ipv4> parse(const std::string& text);
    static Ipv4 parse_or_throw(const std::string& text);

    std::string str() const;
    bool in_subnet(Ipv4 base, int prefix) const;

    friend bool operator==(Ipv4 a, Ipv4 b) { return a.addr == b.addr; }
    friend bool operator!=(Ipv4 a, Ipv4 b) { return a.addr != b.addr; }
    friend bool operator<(Ipv4 a, Ipv4 b) { return a.addr < b.addr; }
};

enum class Proto { tcp, udp, icmp };

const char* proto_name(Proto p);                       // "TCP" / "UDP" / "ICMP"
std::optional<Proto> proto_from_name(const std::string& s);  // case-insensitive

namespace tcpflag {
constexpr std::uint8_t syn = 0x01;
constexpr std::uint8_t ack = 0x02;
constexpr std::uint8_t fin = 0x04;
constexpr std::uint8_t rst = 0x08;
}  // namespace tcpflag

enum class AttackKind { benign, port_scan, icmp_flood, dns_enum };

const char* attack_kind_name(AttackKind k);
std::optional<AttackKind> attack_kind_from_name(const std::string& s);

// Generator-side ground truth, carried for scoring only. Never serialized onto
// the syslog wire.
struct GroundTruthLabel {
    AttackKind kind = AttackKind::benign;
    std::string attack_id;  // empty iff benign

    bool valid() const { return (kind == AttackKind::benign) == attack_id.empty(); }
    friend bool operator==(const GroundTruthLabel&, const GroundTruthLabel&) = default;
};

// One L3/L4 packet on the virtual LAN.
struct PacketRecord {
    Micros ts = 0;
    Proto proto = Proto::tcp;
    Ipv4 src_ip;
    Ipv4 dst_ip;
    std::uint16_t src_port = 0;  // 0 when proto == icmp
    std::uint16_t dst_port = 0;
    std::uint8_t tcp_flags = 0;  // tcpflag bits, TCP only
    int icmp_type = -1;          // -1 = absent, ICMP only
    std::string payload;
    GroundTruthLabel label;
};

void to_json(nlohmann::json& j, const PacketRecord& p);
void from_json(const nlohmann::json& j, PacketRecord& p);

std::string hex_encode(const std::string& bytes);
std::optional<std::string> hex_decode(const std::string& hex);

}  // namespace cids
