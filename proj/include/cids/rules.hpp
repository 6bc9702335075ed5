#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cids/errors.hpp"
#include "cids/packet.hpp"
#include "cids/vtime.hpp"

namespace cids::rules {

// Rule dialect
// ------------
//   alert <proto> <src> <sport> -> <dst> <dport> ( option; option; ... )
//
// proto:   tcp | udp | icmp | ip        (ip matches any L3 protocol)
// address: any | 192.168.1.13 | 192.168.1.0/24
// port:    any | 53 | 1:1024           (inclusive range; ignored for ICMP packets)
// options: msg (single- or double-quoted), sid (required), gid, rev, classtype,
//          metadata (raw text), content (quoted, |xx yy| hex escapes), nocase,
//          detection_filter: track by_src|by_dst, count C, seconds S
//
// Unknown option keywords are hard parse errors. Whitespace between tokens is
// free-form; "->" may be glued to its neighbours.

enum class RuleProto { tcp, udp, icmp, ip };

const char* rule_proto_name(RuleProto p);

struct AddressSpec {
    enum class Kind { any, single, cidr };
    Kind kind = Kind::any;
    Ipv4 ip;
    int prefix = 32;

    bool matches(Ipv4 a) const;
    std::string str() const;
    friend bool operator==(const AddressSpec&, const AddressSpec&) = default;
};

struct PortSpec {
    enum class Kind { any, single, range };
    Kind kind = Kind::any;
    std::uint16_t lo = 0;
    std::uint16_t hi = 0;

    bool matches(std::uint16_t p) const;
    std::string str() const;
    friend bool operator==(const PortSpec&, const PortSpec&) = default;
};

struct DetectionFilterSpec {
    enum class Track { by_src, by_dst };
    Track track = Track::by_dst;
    int count = 1;    // C >= 1
    int seconds = 1;  // S > 0
    friend bool operator==(const DetectionFilterSpec&, const DetectionFilterSpec&) = default;
};

struct ContentPattern {
    std::string bytes;  // non-empty
    bool nocase = false;
    friend bool operator==(const ContentPattern&, const ContentPattern&) = default;
};

struct DetectionRule {
    RuleProto proto = RuleProto::ip;
    AddressSpec src;
    PortSpec src_port;
    AddressSpec dst;
    PortSpec dst_port;
    std::string msg;
    int gid = 1;
    int sid = 0;
    int rev = 0;
    std::optional<std::string> classtype;
    std::optional<std::string> metadata;
    std::optional<ContentPattern> content;
    std::optional<DetectionFilterSpec> filter;

    friend bool operator==(const DetectionRule&, const DetectionRule&) = default;
};

// Throws RuleParseError (with byte offset) on any malformed input.
DetectionRule parse_rule(const std::string& text);

// Canonical single-line form; parse_rule(render_rule(r)) == r. gid:1 and rev:0
// are defaults and not emitted.
std::string render_rule(const DetectionRule& rule);

// Stateless match: proto, addresses, ports (skipped for ICMP packets), content
// substring (case-insensitive when nocase).
bool match_packet(const DetectionRule& rule, const PacketRecord& pkt);

// Sliding-window threshold state for one rule. Tracks per-key match timestamps
// in (ts - S, ts]; a call fires iff the window count including the current
// match exceeds C. Calls must be in non-decreasing ts order per key.
class DetectionFilterState {
public:
    bool decide(const DetectionFilterSpec& spec, Ipv4 key, Micros ts);
    void clear() { windows_.clear(); }

private:
    std::map<std::uint32_t, std::deque<Micros>> windows_;
};

struct Ruleset {
    std::vector<DetectionRule> rules;

    std::size_t size() const { return rules.size(); }
    bool empty() const { return rules.empty(); }
};

// One rule per line; '#' comments and blank lines ignored. Duplicate sids are
// load errors naming both line numbers.
Ruleset load_ruleset(const std::vector<std::string>& lines);
Ruleset load_ruleset_file(const std::string& path);

}  // namespace cids::rules
