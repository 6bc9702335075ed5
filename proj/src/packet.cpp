#include "cids/packet.hpp"

#include <cctype>

#include <nlohmann/json.hpp>

#include "cids/errors.hpp"

namespace cids {

std::optional<Ipv4> Ipv4::parse(const std::string& text) {
    std::uint32_t out = 0;
    int octets = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) return std::nullopt;
        int v = 0;
        std::size_t start = i;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            v = v * 10 + (text[i] - '0');
            if (v > 255 || i - start >= 3) return std::nullopt;
            ++i;
        }
        // "01.2.3.4" is rejected: octets are plain decimal, no zero padding.
        if (i - start > 1 && text[start] == '0') return std::nullopt;
        out = (out << 8) | static_cast<std::uint32_t>(v);
        ++octets;
        if (i < text.size()) {
            if (text[i] != '.' || octets == 4) return std::nullopt;
            ++i;
            if (i == text.size()) return std::nullopt;
        }
    }
    if (octets != 4) return std::nullopt;
    return Ipv4{out};
}

Ipv4 Ipv4::parse_or_throw(const std::string& text) {
    auto ip = parse(text);
    if (!ip) throw ConfigError("invalid IPv4 address: \"" + text + "\"");
    return *ip;
}

std::string Ipv4::str() const {
    return std::to_string((addr >> 24) & 0xff) + "." + std::to_string((addr >> 16) & 0xff) + "." +
           std::to_string((addr >> 8) & 0xff) + "." + std::to_string(addr & 0xff);
}

bool Ipv4::in_subnet(Ipv4 base, int prefix) const {
    if (prefix <= 0) return true;
    if (prefix >= 32) return addr == base.addr;
    std::uint32_t mask = ~((1u << (32 - prefix)) - 1);
    return (addr & mask) == (base.addr & mask);
}

const char* proto_name(Proto p) {
    switch (p) {
        case Proto::tcp: return "TCP";
        case Proto::udp: return "UDP";
        case Proto::icmp: return "ICMP";
    }
    return "?";
}

std::optional<Proto> proto_from_name(const std::string& s) {
    std::string low;
    for (char c : s) low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (low == "tcp") return Proto::tcp;
    if (low == "udp") return Proto::udp;
    if (low == "icmp") return Proto::icmp;
    return std::nullopt;
}

const char* attack_kind_name(AttackKind k) {
    switch (k) {
        case AttackKind::benign: return "benign";
        case AttackKind::port_scan: return "port_scan";
        case AttackKind::icmp_flood: return "icmp_flood";
        case AttackKind::dns_enum: return "dns_enum";
    }
    return "?";
}

std::optional<AttackKind> attack_kind_from_name(const std::string& s) {
    if (s == "benign") return AttackKind::benign;
    if (s == "port_scan") return AttackKind::port_scan;
    if (s == "icmp_flood") return AttackKind::icmp_flood;
    if (s == "dns_enum") return AttackKind::dns_enum;
    return std::nullopt;
}

std::string hex_encode(const std::string& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char c : bytes) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 0xf]);
    }
    return out;
}

std::optional<std::string> hex_decode(const std::string& hex) {
    if (hex.size() % 2 != 0) return std::nullopt;
    auto nib = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    std::string out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = nib(hex[i]), lo = nib(hex[i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out.push_back(static_cast<char>((hi << 4) | lo));
    }
    return out;
}

void to_json(nlohmann::json& j, const PacketRecord& p) {
    j = nlohmann::json{{"ts_us", p.ts},
                       {"proto", proto_name(p.proto)},
                       {"src", p.src_ip.str()},
                       {"sport", p.src_port},
                       {"dst", p.dst_ip.str()},
                       {"dport", p.dst_port},
                       {"label", {{"kind", attack_kind_name(p.label.kind)}, {"id", p.label.attack_id}}}};
    if (p.proto == Proto::tcp) j["flags"] = p.tcp_flags;
    if (p.proto == Proto::icmp) j["icmp_type"] = p.icmp_type;
    if (!p.payload.empty()) j["payload_hex"] = hex_encode(p.payload);
}

void from_json(const nlohmann::json& j, PacketRecord& p) {
    p.ts = j.at("ts_us").get<Micros>();
    auto proto = proto_from_name(j.at("proto").get<std::string>());
    if (!proto) throw ConfigError("packet: unknown proto");
    p.proto = *proto;
    p.src_ip = Ipv4::parse_or_throw(j.at("src").get<std::string>());
    p.dst_ip = Ipv4::parse_or_throw(j.at("dst").get<std::string>());
    p.src_port = j.at("sport").get<std::uint16_t>();
    p.dst_port = j.at("dport").get<std::uint16_t>();
    p.tcp_flags = static_cast<std::uint8_t>(j.value("flags", 0));
    p.icmp_type = j.value("icmp_type", -1);
    if (j.contains("payload_hex")) {
        auto raw = hex_decode(j.at("payload_hex").get<std::string>());
        if (!raw) throw ConfigError("packet: bad payload_hex");
        p.payload = *raw;
    } else {
        p.payload.clear();
    }
    const auto& lbl = j.at("label");
    auto kind = attack_kind_from_name(lbl.at("kind").get<std::string>());
    if (!kind) throw ConfigError("packet: unknown label kind");
    p.label.kind = *kind;
    p.label.attack_id = lbl.at("id").get<std::string>();
}

}  // namespace cids
