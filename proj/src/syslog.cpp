#include "cids/syslog.hpp"

#include <algorithm>
#include <cctype>

namespace cids::syslog {
namespace {

bool valid_tag_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
}

}  // namespace

const char* transport_name(Transport t) {
    return t == Transport::tcp ? "tcp" : "udp";
}

std::optional<Transport> transport_from_name(const std::string& s) {
    if (s == "tcp") return Transport::tcp;
    if (s == "udp") return Transport::udp;
    return std::nullopt;
}

std::string encode(const SyslogMessage& m) {
    if (m.facility < 0 || m.facility > 23)
        throw CodecError("syslog encode: facility out of range");
    if (m.severity < 0 || m.severity > 7)
        throw CodecError("syslog encode: severity out of range");
    if (m.timestamp_s < 0) throw CodecError("syslog encode: negative timestamp");
    if (m.hostname.empty() || m.hostname.find(' ') != std::string::npos)
        throw CodecError("syslog encode: bad hostname \"" + m.hostname + "\"");
    if (m.tag.empty() || !std::all_of(m.tag.begin(), m.tag.end(), valid_tag_char))
        throw CodecError("syslog encode: bad tag \"" + m.tag + "\"");
    if (m.pid && *m.pid < 0) throw CodecError("syslog encode: negative pid");
    if (m.body.find('\0') != std::string::npos)
        throw CodecError("syslog encode: NUL byte in body");
    if (m.body.find('\n') != std::string::npos)
        throw CodecError("syslog encode: raw newline in body (frame it instead)");

    std::string out = "<" + std::to_string(pri_value(m)) + ">";
    out += format_syslog_time(m.timestamp_s);
    out += " " + m.hostname + " " + m.tag;
    if (m.pid) out += "[" + std::to_string(*m.pid) + "]";
    out += ": " + m.body;
    return out;
}

SyslogMessage decode(const std::string& bytes) {
    std::string text = bytes;
    if (!text.empty() && text.back() == '\n') text.pop_back();
    if (text.find('\n') != std::string::npos)
        throw CodecError("syslog decode: embedded newline (one message per line)");

    if (text.empty() || text[0] != '<') throw CodecError("syslog decode: missing <PRI> prefix");
    auto close = text.find('>');
    if (close == std::string::npos || close < 2 || close > 4)
        throw CodecError("syslog decode: malformed <PRI> prefix");
    int pri = 0;
    for (std::size_t i = 1; i < close; ++i) {
        char c = text[i];
        if (c < '0' || c > '9') throw CodecError("syslog decode: non-numeric PRI");
        pri = pri * 10 + (c - '0');
    }
    if (pri > 191) throw CodecError("syslog decode: PRI out of range");

    SyslogMessage m;
    m.facility = pri / 8;
    m.severity = pri % 8;

    std::size_t pos = close + 1;
    if (text.size() < pos + 15) throw CodecError("syslog decode: truncated timestamp");
    auto ts = parse_syslog_time(text.substr(pos, 15));
    if (!ts) throw CodecError("syslog decode: bad timestamp field");
    m.timestamp_s = *ts;
    pos += 15;

    if (pos >= text.size() || text[pos] != ' ')
        throw CodecError("syslog decode: expected space after timestamp");
    ++pos;
    auto host_end = text.find(' ', pos);
    if (host_end == std::string::npos || host_end == pos)
        throw CodecError("syslog decode: missing hostname");
    m.hostname = text.substr(pos, host_end - pos);
    pos = host_end + 1;

    auto colon = text.find(':', pos);
    if (colon == std::string::npos || colon == pos)
        throw CodecError("syslog decode: missing tag");
    std::string tag_field = text.substr(pos, colon - pos);
    if (!tag_field.empty() && tag_field.back() == ']') {
        auto open = tag_field.find('[');
        if (open == std::string::npos || open == 0)
            throw CodecError("syslog decode: malformed pid suffix");
        std::string digits = tag_field.substr(open + 1, tag_field.size() - open - 2);
        if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) {
                return c >= '0' && c <= '9';
            }))
            throw CodecError("syslog decode: non-numeric pid");
        m.pid = std::stoi(digits);
        tag_field.resize(open);
    }
    if (tag_field.empty() || !std::all_of(tag_field.begin(), tag_field.end(), valid_tag_char))
        throw CodecError("syslog decode: bad tag \"" + tag_field + "\"");
    m.tag = tag_field;

    pos = colon + 1;
    if (pos < text.size()) {
        if (text[pos] != ' ') throw CodecError("syslog decode: expected space before body");
        m.body = text.substr(pos + 1);
    }
    return m;
}

std::string tcp_frame(const std::string& encoded) {
    std::string out;
    out.reserve(encoded.size() + 1);
    for (char c : encoded) {
        if (c == '\\') out += "\\\\";
        else if (c == '\n') out += "\\n";
        else out.push_back(c);
    }
    out.push_back('\n');
    return out;
}

std::string tcp_unframe(const std::string& frame) {
    if (frame.empty() || frame.back() != '\n')
        throw CodecError("syslog unframe: frame not newline-terminated");
    std::string out;
    out.reserve(frame.size());
    for (std::size_t i = 0; i + 1 < frame.size(); ++i) {
        char c = frame[i];
        if (c == '\n') throw CodecError("syslog unframe: unescaped newline inside frame");
        if (c == '\\') {
            if (i + 2 >= frame.size()) throw CodecError("syslog unframe: dangling escape");
            char n = frame[++i];
            if (n == '\\') out.push_back('\\');
            else if (n == 'n') out.push_back('\n');
            else throw CodecError("syslog unframe: unknown escape");
        } else {
            out.push_back(c);
        }
    }
    return out;
}

Forwarder::Forwarder(ForwarderConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), rng_(seed) {}

std::optional<std::string> Forwarder::forward(const std::string& body, Micros now) {
    ++offered_;

    if (cfg_.rate_limit) {
        const std::int64_t interval_us = cfg_.rate_limit->interval_s * kMicrosPerSecond;
        std::int64_t window = now / interval_us;
        if (window != window_) {
            window_ = window;
            in_window_ = 0;
        }
        if (in_window_ >= cfg_.rate_limit->burst) {
            ++rate_dropped_;
            return std::nullopt;
        }
        ++in_window_;
    }

    if (cfg_.transport == Transport::udp && cfg_.udp_drop_prob > 0.0) {
        // Top 53 bits as a uniform double in [0,1); keeps runs portable across
        // standard library implementations.
        double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        if (u < cfg_.udp_drop_prob) {
            ++udp_lost_;
            return std::nullopt;
        }
    }

    SyslogMessage m;
    m.facility = cfg_.facility;
    m.severity = cfg_.severity;
    m.timestamp_s = now / kMicrosPerSecond;
    m.hostname = cfg_.hostname;
    m.tag = cfg_.tag;
    m.pid = cfg_.pid;
    m.body = body;

    std::string encoded = encode(m);
    ++sent_;
    if (cfg_.transport == Transport::tcp) return tcp_frame(encoded);
    return encoded;  // one datagram per message
}

void CentralReceiver::receive_frame(const std::string& bytes, Micros received_at,
                                    Transport transport) {
    SyslogMessage m;
    try {
        const std::string encoded = transport == Transport::tcp ? tcp_unframe(bytes) : bytes;
        m = decode(encoded);
    } catch (const CodecError&) {
        ++malformed_;
        return;
    }
    ++received_;
    for (auto& h : handlers_) h(m, received_at);
}

}  // namespace cids::syslog
