#include "cids/rules.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace cids::rules {
namespace {

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool printable(char c) {
    return c >= 0x20 && c <= 0x7e;
}

char lower(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

int parse_int_field(const std::string& raw, const char* what, std::size_t offset) {
    std::string s = raw;
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) {
            return std::isdigit(static_cast<unsigned char>(c));
        }))
        throw RuleParseError(std::string(what) + ": integer expected, got \"" + raw + "\"", offset);
    try {
        return std::stoi(s);
    } catch (...) {
        throw RuleParseError(std::string(what) + ": integer out of range", offset);
    }
}

// Cursor over one rule line.
class Scanner {
public:
    explicit Scanner(const std::string& text) : text_(text) {}

    std::size_t pos() const { return pos_; }
    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
    void next() { ++pos_; }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    // Header token: a run of non-space chars, stopping before '(' and before
    // an embedded "->" so "any->any" still splits.
    std::string header_token() {
        skip_ws();
        std::size_t start = pos_;
        if (pos_ + 1 < text_.size() && text_[pos_] == '-' && text_[pos_ + 1] == '>') {
            pos_ += 2;
            return "->";
        }
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(c)) || c == '(') break;
            if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') break;
            ++pos_;
        }
        return text_.substr(start, pos_ - start);
    }

    [[noreturn]] void fail(const std::string& msg) const { throw RuleParseError(msg, pos_); }
    [[noreturn]] void fail_at(const std::string& msg, std::size_t at) const {
        throw RuleParseError(msg, at);
    }

private:
    const std::string& text_;
    std::size_t pos_ = 0;
};

AddressSpec parse_address(const std::string& tok, std::size_t offset) {
    AddressSpec out;
    if (tok == "any") return out;
    auto slash = tok.find('/');
    if (slash != std::string::npos) {
        auto ip = Ipv4::parse(tok.substr(0, slash));
        if (!ip) throw RuleParseError("bad address \"" + tok + "\"", offset);
        int prefix = parse_int_field(tok.substr(slash + 1), "cidr prefix", offset);
        if (prefix < 0 || prefix > 32)
            throw RuleParseError("cidr prefix out of range in \"" + tok + "\"", offset);
        out.kind = AddressSpec::Kind::cidr;
        out.ip = *ip;
        out.prefix = prefix;
        return out;
    }
    auto ip = Ipv4::parse(tok);
    if (!ip) throw RuleParseError("bad address \"" + tok + "\"", offset);
    out.kind = AddressSpec::Kind::single;
    out.ip = *ip;
    return out;
}

PortSpec parse_port(const std::string& tok, std::size_t offset) {
    PortSpec out;
    if (tok == "any") return out;
    auto parse_one = [&](const std::string& s) -> std::uint16_t {
        int v = parse_int_field(s, "port", offset);
        if (v < 0 || v > 65535)
            throw RuleParseError("port out of range in \"" + tok + "\"", offset);
        return static_cast<std::uint16_t>(v);
    };
    auto colon = tok.find(':');
    if (colon != std::string::npos) {
        out.kind = PortSpec::Kind::range;
        out.lo = parse_one(tok.substr(0, colon));
        out.hi = parse_one(tok.substr(colon + 1));
        if (out.lo > out.hi)
            throw RuleParseError("port range inverted in \"" + tok + "\"", offset);
        return out;
    }
    out.kind = PortSpec::Kind::single;
    out.lo = out.hi = parse_one(tok);
    return out;
}

std::string parse_quoted(Scanner& sc, const char* what) {
    sc.skip_ws();
    char quote = sc.peek();
    if (quote != '"' && quote != '\'')
        sc.fail(std::string(what) + ": quoted string expected");
    std::size_t start = sc.pos();
    sc.next();
    std::string value;
    while (!sc.at_end() && sc.peek() != quote) {
        value.push_back(sc.peek());
        sc.next();
    }
    if (sc.at_end()) sc.fail_at(std::string(what) + ": unterminated quote", start);
    sc.next();  // closing quote
    return value;
}

ContentPattern parse_content_value(Scanner& sc) {
    sc.skip_ws();
    char quote = sc.peek();
    if (quote != '"' && quote != '\'') sc.fail("content: quoted pattern expected");
    std::size_t start = sc.pos();
    sc.next();
    ContentPattern out;
    while (!sc.at_end() && sc.peek() != quote) {
        char c = sc.peek();
        if (c == '|') {
            sc.next();
            // hex block: pairs of hex digits, spaces free
            std::string hexpart;
            while (!sc.at_end() && sc.peek() != '|') {
                if (!std::isspace(static_cast<unsigned char>(sc.peek())))
                    hexpart.push_back(sc.peek());
                sc.next();
            }
            if (sc.at_end()) sc.fail_at("content: unterminated hex block", start);
            sc.next();  // closing '|'
            auto raw = hex_decode(hexpart);
            if (!raw) sc.fail_at("content: bad hex block \"" + hexpart + "\"", start);
            out.bytes += *raw;
        } else {
            if (!printable(c)) sc.fail("content: unprintable byte, use |xx| escape");
            out.bytes.push_back(c);
            sc.next();
        }
    }
    if (sc.at_end()) sc.fail_at("content: unterminated quote", start);
    sc.next();
    if (out.bytes.empty()) sc.fail_at("content: empty pattern", start);
    return out;
}

DetectionFilterSpec parse_detection_filter(const std::string& raw, std::size_t offset) {
    // track by_src|by_dst, count C, seconds S
    std::vector<std::string> parts;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    if (parts.size() != 3)
        throw RuleParseError("detection_filter: expected \"track ..., count ..., seconds ...\"",
                             offset);
    auto words = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream w(s);
        std::string t;
        while (w >> t) out.push_back(t);
        return out;
    };
    DetectionFilterSpec spec;
    auto track = words(parts[0]);
    if (track.size() != 2 || track[0] != "track" || (track[1] != "by_src" && track[1] != "by_dst"))
        throw RuleParseError("detection_filter: bad track clause \"" + parts[0] + "\"", offset);
    spec.track = track[1] == "by_src" ? DetectionFilterSpec::Track::by_src
                                      : DetectionFilterSpec::Track::by_dst;
    auto count = words(parts[1]);
    if (count.size() != 2 || count[0] != "count")
        throw RuleParseError("detection_filter: bad count clause \"" + parts[1] + "\"", offset);
    spec.count = parse_int_field(count[1], "detection_filter count", offset);
    if (spec.count < 1) throw RuleParseError("detection_filter: count must be >= 1", offset);
    auto secs = words(parts[2]);
    if (secs.size() != 2 || secs[0] != "seconds")
        throw RuleParseError("detection_filter: bad seconds clause \"" + parts[2] + "\"", offset);
    spec.seconds = parse_int_field(secs[1], "detection_filter seconds", offset);
    if (spec.seconds < 1) throw RuleParseError("detection_filter: seconds must be >= 1", offset);
    return spec;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

const char* rule_proto_name(RuleProto p) {
    switch (p) {
        case RuleProto::tcp: return "tcp";
        case RuleProto::udp: return "udp";
        case RuleProto::icmp: return "icmp";
        case RuleProto::ip: return "ip";
    }
    return "?";
}

bool AddressSpec::matches(Ipv4 a) const {
    switch (kind) {
        case Kind::any: return true;
        case Kind::single: return a == ip;
        case Kind::cidr: return a.in_subnet(ip, prefix);
    }
    return false;
}

std::string AddressSpec::str() const {
    switch (kind) {
        case Kind::any: return "any";
        case Kind::single: return ip.str();
        case Kind::cidr: return ip.str() + "/" + std::to_string(prefix);
    }
    return "?";
}

bool PortSpec::matches(std::uint16_t p) const {
    if (kind == Kind::any) return true;
    return p >= lo && p <= hi;
}

std::string PortSpec::str() const {
    switch (kind) {
        case Kind::any: return "any";
        case Kind::single: return std::to_string(lo);
        case Kind::range: return std::to_string(lo) + ":" + std::to_string(hi);
    }
    return "?";
}

DetectionRule parse_rule(const std::string& text) {
    Scanner sc(text);
    DetectionRule rule;

    std::size_t tok_at = sc.pos();
    sc.skip_ws();
    tok_at = sc.pos();
    std::string tok = sc.header_token();
    if (tok != "alert") sc.fail_at("expected action \"alert\", got \"" + tok + "\"", tok_at);

    sc.skip_ws();
    tok_at = sc.pos();
    tok = sc.header_token();
    if (tok == "tcp") rule.proto = RuleProto::tcp;
    else if (tok == "udp") rule.proto = RuleProto::udp;
    else if (tok == "icmp") rule.proto = RuleProto::icmp;
    else if (tok == "ip") rule.proto = RuleProto::ip;
    else sc.fail_at("unknown protocol \"" + tok + "\"", tok_at);

    sc.skip_ws();
    tok_at = sc.pos();
    rule.src = parse_address(sc.header_token(), tok_at);
    sc.skip_ws();
    tok_at = sc.pos();
    rule.src_port = parse_port(sc.header_token(), tok_at);

    sc.skip_ws();
    tok_at = sc.pos();
    tok = sc.header_token();
    if (tok != "->") sc.fail_at("expected \"->\", got \"" + tok + "\"", tok_at);

    sc.skip_ws();
    tok_at = sc.pos();
    rule.dst = parse_address(sc.header_token(), tok_at);
    sc.skip_ws();
    tok_at = sc.pos();
    rule.dst_port = parse_port(sc.header_token(), tok_at);

    sc.skip_ws();
    if (sc.peek() != '(') sc.fail("expected '(' to open rule options");
    sc.next();

    bool seen_msg = false, seen_sid = false, seen_gid = false, seen_rev = false;
    bool seen_classtype = false, seen_metadata = false, seen_content = false, seen_filter = false;
    bool seen_nocase = false;

    while (true) {
        sc.skip_ws();
        if (sc.at_end()) sc.fail("unterminated rule options, expected ')'");
        if (sc.peek() == ')') {
            sc.next();
            break;
        }
        std::size_t key_at = sc.pos();
        std::string key;
        while (!sc.at_end() && is_ident_char(sc.peek())) {
            key.push_back(sc.peek());
            sc.next();
        }
        if (key.empty()) sc.fail("expected option keyword");
        sc.skip_ws();

        auto expect_semi = [&]() {
            sc.skip_ws();
            if (sc.peek() != ';') sc.fail("expected ';' after option \"" + key + "\"");
            sc.next();
        };
        auto raw_value = [&]() -> std::string {
            if (sc.peek() != ':') sc.fail("option \"" + key + "\" requires a value");
            sc.next();
            std::string v;
            while (!sc.at_end() && sc.peek() != ';') {
                v.push_back(sc.peek());
                sc.next();
            }
            if (sc.at_end()) sc.fail("expected ';' after option \"" + key + "\"");
            sc.next();  // ';'
            return v;
        };
        auto once = [&](bool& flag) {
            if (flag) sc.fail_at("duplicate option \"" + key + "\"", key_at);
            flag = true;
        };

        if (key == "msg") {
            once(seen_msg);
            if (sc.peek() != ':') sc.fail("option \"msg\" requires a value");
            sc.next();
            rule.msg = parse_quoted(sc, "msg");
            if (rule.msg.find('"') != std::string::npos)
                sc.fail_at("msg may not contain a double quote", key_at);
            expect_semi();
        } else if (key == "content") {
            once(seen_content);
            if (sc.peek() != ':') sc.fail("option \"content\" requires a value");
            sc.next();
            rule.content = parse_content_value(sc);
            expect_semi();
        } else if (key == "nocase") {
            once(seen_nocase);
            if (!rule.content) sc.fail_at("nocase requires a preceding content option", key_at);
            rule.content->nocase = true;
            expect_semi();
        } else if (key == "sid") {
            once(seen_sid);
            rule.sid = parse_int_field(raw_value(), "sid", key_at);
            if (rule.sid <= 0) sc.fail_at("sid must be > 0", key_at);
        } else if (key == "gid") {
            once(seen_gid);
            rule.gid = parse_int_field(raw_value(), "gid", key_at);
            if (rule.gid < 1) sc.fail_at("gid must be >= 1", key_at);
        } else if (key == "rev") {
            once(seen_rev);
            rule.rev = parse_int_field(raw_value(), "rev", key_at);
            if (rule.rev < 0) sc.fail_at("rev must be >= 0", key_at);
        } else if (key == "classtype") {
            once(seen_classtype);
            std::string v = trim(raw_value());
            if (v.empty() || !std::all_of(v.begin(), v.end(), [](char c) {
                    return is_ident_char(c) || c == '-';
                }))
                sc.fail_at("classtype: bad value \"" + v + "\"", key_at);
            rule.classtype = v;
        } else if (key == "metadata") {
            once(seen_metadata);
            std::string v = trim(raw_value());
            if (v.empty()) sc.fail_at("metadata: empty value", key_at);
            rule.metadata = v;
        } else if (key == "detection_filter") {
            once(seen_filter);
            rule.filter = parse_detection_filter(raw_value(), key_at);
        } else {
            sc.fail_at("unknown option \"" + key + "\"", key_at);
        }
    }

    sc.skip_ws();
    if (!sc.at_end()) sc.fail("trailing characters after ')'");
    if (!seen_sid) throw RuleParseError("sid required", text.size());
    return rule;
}

namespace {

std::string render_content_bytes(const std::string& bytes) {
    std::string out;
    std::string hexrun;
    auto flush_hex = [&]() {
        if (hexrun.empty()) return;
        out += "|" + hexrun + "|";
        hexrun.clear();
    };
    static const char* digits = "0123456789ABCDEF";
    for (unsigned char c : bytes) {
        if (printable(static_cast<char>(c)) && c != '|' && c != '"' && c != '\'') {
            flush_hex();
            out.push_back(static_cast<char>(c));
        } else {
            if (!hexrun.empty()) hexrun.push_back(' ');
            hexrun.push_back(digits[c >> 4]);
            hexrun.push_back(digits[c & 0xf]);
        }
    }
    flush_hex();
    return out;
}

}  // namespace

std::string render_rule(const DetectionRule& rule) {
    std::string out = "alert ";
    out += rule_proto_name(rule.proto);
    out += " " + rule.src.str() + " " + rule.src_port.str() + " -> " + rule.dst.str() + " " +
           rule.dst_port.str() + " ( ";
    out += "msg:\"" + rule.msg + "\"; ";
    if (rule.content) {
        out += "content:\"" + render_content_bytes(rule.content->bytes) + "\"; ";
        if (rule.content->nocase) out += "nocase; ";
    }
    if (rule.metadata) out += "metadata:" + *rule.metadata + "; ";
    if (rule.classtype) out += "classtype:" + *rule.classtype + "; ";
    if (rule.filter) {
        out += "detection_filter: track ";
        out += rule.filter->track == DetectionFilterSpec::Track::by_src ? "by_src" : "by_dst";
        out += ", count " + std::to_string(rule.filter->count) + ", seconds " +
               std::to_string(rule.filter->seconds) + "; ";
    }
    if (rule.gid != 1) out += "gid:" + std::to_string(rule.gid) + "; ";
    out += "sid:" + std::to_string(rule.sid) + "; ";
    if (rule.rev != 0) out += "rev:" + std::to_string(rule.rev) + "; ";
    out += ")";
    return out;
}

bool match_packet(const DetectionRule& rule, const PacketRecord& pkt) {
    switch (rule.proto) {
        case RuleProto::tcp:
            if (pkt.proto != Proto::tcp) return false;
            break;
        case RuleProto::udp:
            if (pkt.proto != Proto::udp) return false;
            break;
        case RuleProto::icmp:
            if (pkt.proto != Proto::icmp) return false;
            break;
        case RuleProto::ip:
            break;
    }
    if (!rule.src.matches(pkt.src_ip) || !rule.dst.matches(pkt.dst_ip)) return false;
    if (pkt.proto != Proto::icmp) {
        if (!rule.src_port.matches(pkt.src_port) || !rule.dst_port.matches(pkt.dst_port))
            return false;
    }
    if (rule.content) {
        const std::string& pat = rule.content->bytes;
        const std::string& hay = pkt.payload;
        if (pat.size() > hay.size()) return false;
        auto it = rule.content->nocase
                      ? std::search(hay.begin(), hay.end(), pat.begin(), pat.end(),
                                    [](char a, char b) { return lower(a) == lower(b); })
                      : std::search(hay.begin(), hay.end(), pat.begin(), pat.end());
        if (it == hay.end()) return false;
    }
    return true;
}

bool DetectionFilterState::decide(const DetectionFilterSpec& spec, Ipv4 key, Micros ts) {
    auto& window = windows_[key.addr];
    if (!window.empty() && ts < window.back())
        throw InvariantError("detection_filter: out-of-order timestamp for key " + key.str());
    window.push_back(ts);
    const Micros cutoff = ts - static_cast<Micros>(spec.seconds) * kMicrosPerSecond;
    while (window.front() <= cutoff) window.pop_front();
    return static_cast<int>(window.size()) > spec.count;
}

Ruleset load_ruleset(const std::vector<std::string>& lines) {
    Ruleset rs;
    std::map<int, int> sid_lines;
    int lineno = 0;
    for (const auto& raw : lines) {
        ++lineno;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        DetectionRule rule;
        try {
            rule = parse_rule(line);
        } catch (const RuleParseError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
        auto [it, inserted] = sid_lines.emplace(rule.sid, lineno);
        if (!inserted)
            throw ConfigError("duplicate sid " + std::to_string(rule.sid) + " (lines " +
                              std::to_string(it->second) + " and " + std::to_string(lineno) + ")");
        rs.rules.push_back(std::move(rule));
    }
    return rs;
}

Ruleset load_ruleset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open rule file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return load_ruleset(lines);
}

}  // namespace cids::rules
