#include "cids/siem.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace cids::siem {
namespace {

// Minimal cursor over an alert body.
struct Cursor {
    const std::string& s;
    std::size_t pos = 0;

    bool eat(const char* lit) {
        std::size_t n = std::strlen(lit);
        if (s.compare(pos, n, lit) != 0) return false;
        pos += n;
        return true;
    }
    std::optional<int> digits() {
        std::size_t start = pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
        if (pos == start || pos - start > 9) return std::nullopt;
        return std::stoi(s.substr(start, pos - start));
    }
    std::optional<std::string> until(char stop) {
        auto at = s.find(stop, pos);
        if (at == std::string::npos) return std::nullopt;
        std::string out = s.substr(pos, at - pos);
        pos = at;
        return out;
    }
    bool done() const { return pos == s.size(); }
};

std::optional<std::pair<Ipv4, std::uint16_t>> parse_endpoint(const std::string& text,
                                                             bool with_port) {
    if (!with_port) {
        auto ip = Ipv4::parse(text);
        if (!ip) return std::nullopt;
        return std::make_pair(*ip, std::uint16_t{0});
    }
    auto colon = text.rfind(':');
    if (colon == std::string::npos) return std::nullopt;
    auto ip = Ipv4::parse(text.substr(0, colon));
    if (!ip) return std::nullopt;
    const std::string digits = text.substr(colon + 1);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos ||
        digits.size() > 5)
        return std::nullopt;
    int port = std::stoi(digits);
    if (port > 65535) return std::nullopt;
    return std::make_pair(*ip, static_cast<std::uint16_t>(port));
}

const std::set<std::string>& known_fields() {
    static const std::set<std::string> fields = {
        "host",   "severity", "facility", "syslogtag", "name",    "pid",      "msg",
        "sid",    "gid",      "rev",      "classtype", "priority", "proto",   "src_ip",
        "src_port", "dst_ip", "dst_port"};
    return fields;
}

std::optional<std::string> field_value(const SiemEvent& e, const std::string& field) {
    if (field == "host") return e.host;
    if (field == "severity") return e.severity;
    if (field == "facility") return e.facility;
    if (field == "syslogtag") return e.syslogtag;
    if (field == "name") return e.name;
    if (field == "pid")
        return e.pid ? std::optional<std::string>(std::to_string(*e.pid)) : std::nullopt;
    if (!known_fields().count(field)) throw QueryError("unknown field \"" + field + "\"");
    if (!e.alert) return std::nullopt;
    const ParsedAlert& a = *e.alert;
    if (field == "msg") return a.msg;
    if (field == "sid") return std::to_string(a.sid);
    if (field == "gid") return std::to_string(a.gid);
    if (field == "rev") return std::to_string(a.rev);
    if (field == "classtype") return a.classtype;
    if (field == "priority")
        return a.priority ? std::optional<std::string>(std::to_string(*a.priority)) : std::nullopt;
    if (field == "proto") return std::string(proto_name(a.proto));
    if (field == "src_ip") return a.src_ip.str();
    if (field == "src_port") return std::to_string(a.src_port);
    if (field == "dst_ip") return a.dst_ip.str();
    if (field == "dst_port") return std::to_string(a.dst_port);
    return std::nullopt;
}

void check_field(const std::string& field) {
    if (!known_fields().count(field)) throw QueryError("unknown field \"" + field + "\"");
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

std::optional<ParsedAlert> parse_alert_body(const std::string& body) {
    Cursor c{body};
    ParsedAlert a;

    if (!c.eat("[")) return std::nullopt;
    auto gid = c.digits();
    if (!gid || !c.eat(":")) return std::nullopt;
    auto sid = c.digits();
    if (!sid || !c.eat(":")) return std::nullopt;
    auto rev = c.digits();
    if (!rev || !c.eat("] \"")) return std::nullopt;
    a.gid = *gid;
    a.sid = *sid;
    a.rev = *rev;

    auto msg = c.until('"');
    if (!msg) return std::nullopt;
    a.msg = *msg;
    c.pos += 1;  // closing quote

    if (c.eat(" [Classification: ")) {
        auto ct = c.until(']');
        if (!ct || ct->empty()) return std::nullopt;
        a.classtype = *ct;
        if (!c.eat("] [Priority: ")) return std::nullopt;
        auto prio = c.digits();
        if (!prio || !c.eat("]")) return std::nullopt;
        a.priority = *prio;
    }

    if (!c.eat(" {")) return std::nullopt;
    auto proto_text = c.until('}');
    if (!proto_text) return std::nullopt;
    auto proto = proto_from_name(*proto_text);
    if (!proto) return std::nullopt;
    a.proto = *proto;
    c.pos += 1;
    if (!c.eat(" ")) return std::nullopt;

    const bool ports = a.proto != Proto::icmp;
    auto src_text = c.until(' ');
    if (!src_text) return std::nullopt;
    auto src = parse_endpoint(*src_text, ports);
    if (!src) return std::nullopt;
    a.src_ip = src->first;
    a.src_port = src->second;

    if (!c.eat(" -> ")) return std::nullopt;
    std::string dst_text = body.substr(c.pos);
    auto dst = parse_endpoint(dst_text, ports);
    if (!dst) return std::nullopt;
    a.dst_ip = dst->first;
    a.dst_port = dst->second;
    return a;
}

IngestResult Repository::ingest_bulk(const std::vector<std::string>& lines, Micros ingest_ts) {
    seek(ingest_ts);
    const std::int64_t day = ingest_ts / kMicrosPerDay;
    IngestResult result;
    for (const auto& line : lines) {
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            ++result.malformed;
            continue;
        }
        SiemEvent e;
        try {
            auto ts = parse_rfc3339(j.at("@timestamp").get<std::string>());
            if (!ts) throw CodecError("bad @timestamp");
            e.event_ts = *ts * kMicrosPerSecond;
            e.raw_message = j.at("message").get<std::string>();
            e.host = j.at("host").get<std::string>();
            e.severity = j.at("severity").get<std::string>();
            e.facility = j.at("facility").get<std::string>();
            e.syslogtag = j.at("syslogtag").get<std::string>();
            e.name = j.at("name").get<std::string>();
            const auto& pid = j.at("pid");
            if (!pid.is_null()) e.pid = pid.get<int>();
        } catch (const std::exception&) {
            ++result.malformed;
            continue;
        }
        const auto cost = static_cast<std::int64_t>(line.size());
        if (bytes_by_day_[day] + cost > quota_) {
            ++result.rejected_over_quota;
            continue;
        }
        bytes_by_day_[day] += cost;
        e.ingest_ts = ingest_ts;
        e.alert = parse_alert_body(e.raw_message);
        events_.push_back(std::move(e));
        ++result.accepted;
    }
    accepted_total_ += result.accepted;
    rejected_total_ += result.rejected_over_quota;
    malformed_total_ += result.malformed;
    return result;
}

void Repository::seek(Micros now) {
    if (now > now_) now_ = now;
}

bool Repository::visible(const SiemEvent& e) const {
    return e.event_ts > now_ - static_cast<Micros>(retention_days_) * kMicrosPerDay;
}

std::int64_t Repository::apply_retention(Micros now) {
    seek(now);
    const auto before = events_.size();
    std::erase_if(events_, [this](const SiemEvent& e) { return !visible(e); });
    return static_cast<std::int64_t>(before - events_.size());
}

std::int64_t Repository::visible_count() const {
    return std::count_if(events_.begin(), events_.end(),
                         [this](const SiemEvent& e) { return visible(e); });
}

std::int64_t Repository::bytes_ingested_on(std::int64_t day) const {
    auto it = bytes_by_day_.find(day);
    return it == bytes_by_day_.end() ? 0 : it->second;
}

Query parse_query(const std::string& text) {
    Query q;
    std::size_t start = 0;
    std::vector<std::string> stages;
    while (start <= text.size()) {
        auto bar = text.find('|', start);
        if (bar == std::string::npos) {
            stages.push_back(trim(text.substr(start)));
            break;
        }
        stages.push_back(trim(text.substr(start, bar - start)));
        start = bar + 1;
    }

    for (const auto& stage : stages) {
        if (stage.empty()) throw QueryError("empty query stage");
        auto open = stage.find('(');
        if (open == std::string::npos || stage.back() != ')')
            throw QueryError("stage \"" + stage + "\" is not name(args)");
        std::string name = trim(stage.substr(0, open));
        std::string args = stage.substr(open + 1, stage.size() - open - 2);

        if (name == "filter") {
            std::size_t p = 0;
            while (p <= args.size()) {
                auto comma = args.find(',', p);
                std::string part =
                    trim(comma == std::string::npos ? args.substr(p) : args.substr(p, comma - p));
                auto eq = part.find('=');
                if (eq == std::string::npos)
                    throw QueryError("filter term \"" + part + "\" is not field=value");
                std::string field = trim(part.substr(0, eq));
                std::string value = trim(part.substr(eq + 1));
                if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
                    value = value.substr(1, value.size() - 2);
                check_field(field);
                q.filters.push_back({field, value});
                if (comma == std::string::npos) break;
                p = comma + 1;
            }
        } else if (name == "window") {
            if (q.window) throw QueryError("duplicate window stage");
            double a, b;
            if (std::sscanf(args.c_str(), "%lf , %lf", &a, &b) != 2 &&
                std::sscanf(args.c_str(), "%lf,%lf", &a, &b) != 2)
                throw QueryError("window args must be start,end seconds");
            if (b < a) throw QueryError("window end before start");
            q.window = {micros_from_seconds(a), micros_from_seconds(b)};
        } else if (name == "groupby" || name == "group_by") {
            if (q.group_by) throw QueryError("duplicate groupby stage");
            std::string field = trim(args);
            check_field(field);
            q.group_by = field;
        } else if (name == "count") {
            if (q.count_field) throw QueryError("duplicate count stage");
            std::string field = trim(args);
            if (field != "*") check_field(field);
            q.count_field = field;
        } else {
            throw QueryError("unknown query stage \"" + name + "\"");
        }
    }
    return q;
}

QueryResult Repository::run_query(const Query& q) const {
    for (const auto& f : q.filters) check_field(f.field);
    if (q.group_by) check_field(*q.group_by);
    if (q.count_field && *q.count_field != "*") check_field(*q.count_field);
    const std::string count_field = q.count_field.value_or("*");

    auto counted = [&](const SiemEvent& e) {
        return count_field == "*" || field_value(e, count_field).has_value();
    };

    std::map<std::string, std::int64_t> groups;
    std::int64_t scalar = 0;
    for (const auto& e : events_) {
        if (!visible(e)) continue;
        if (q.window && (e.event_ts < q.window->first || e.event_ts >= q.window->second)) continue;
        bool pass = true;
        for (const auto& f : q.filters) {
            auto v = field_value(e, f.field);
            if (!v || *v != f.value) {
                pass = false;
                break;
            }
        }
        if (!pass || !counted(e)) continue;
        if (q.group_by) {
            auto key = field_value(e, *q.group_by);
            if (!key) continue;  // no group for events lacking the field
            ++groups[*key];
        } else {
            ++scalar;
        }
    }

    QueryResult out;
    if (q.group_by) out.groups.assign(groups.begin(), groups.end());
    else out.scalar = scalar;
    return out;
}

std::vector<MetaAlert> Repository::correlate(const CorrelationParams& params) const {
    if (params.min_nodes < 2) throw ConfigError("correlation min_nodes must be >= 2");
    const Micros window_us = params.window_s * kMicrosPerSecond;

    struct Entry {
        Micros ts;
        std::string host;
    };
    std::map<std::pair<std::uint32_t, int>, std::vector<Entry>> by_key;
    for (const auto& e : events_) {
        if (!visible(e) || !e.alert) continue;
        by_key[{e.alert->src_ip.addr, e.alert->sid}].push_back({e.event_ts, e.host});
    }

    std::vector<MetaAlert> out;
    for (auto& [key, entries] : by_key) {
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
            return a.ts != b.ts ? a.ts < b.ts : a.host < b.host;
        });

        // Sliding span of length <= window over sorted events; [i..j] qualifies
        // when it spans >= min_nodes distinct hosts. Qualifying index ranges
        // that share events merge into one maximal span.
        std::vector<std::pair<std::size_t, std::size_t>> merged;
        std::map<std::string, int> host_count;
        std::size_t i = 0;
        for (std::size_t j = 0; j < entries.size(); ++j) {
            ++host_count[entries[j].host];
            while (entries[j].ts - entries[i].ts > window_us) {
                auto it = host_count.find(entries[i].host);
                if (--it->second == 0) host_count.erase(it);
                ++i;
            }
            if (static_cast<int>(host_count.size()) >= params.min_nodes) {
                if (!merged.empty() && i <= merged.back().second) {
                    merged.back().second = j;
                } else {
                    merged.emplace_back(i, j);
                }
            }
        }

        for (auto [lo, hi] : merged) {
            MetaAlert meta;
            meta.attacker_ip = Ipv4{key.first};
            meta.sid = key.second;
            std::set<std::string> hosts;
            for (std::size_t k = lo; k <= hi; ++k) hosts.insert(entries[k].host);
            meta.nodes.assign(hosts.begin(), hosts.end());
            meta.window_start = entries[lo].ts;
            meta.window_end = entries[hi].ts;
            meta.event_count = static_cast<std::int64_t>(hi - lo + 1);
            out.push_back(std::move(meta));
        }
    }
    return out;
}

void Repository::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write siem file: " + path);
    nlohmann::ordered_json header;
    header["schema_version"] = 1;
    header["kind"] = "siem";
    header["now_us"] = now_;
    header["daily_quota_bytes"] = quota_;
    header["retention_days"] = retention_days_;
    header["accepted"] = accepted_total_;
    header["rejected_over_quota"] = rejected_total_;
    header["malformed"] = malformed_total_;
    nlohmann::ordered_json days = nlohmann::ordered_json::object();
    for (const auto& [day, bytes] : bytes_by_day_) days[std::to_string(day)] = bytes;
    header["bytes_by_day"] = days;
    out << header.dump() << "\n";
    for (const auto& e : events_) {
        nlohmann::ordered_json j;
        j["ingest_ts_us"] = e.ingest_ts;
        j["event_ts_us"] = e.event_ts;
        j["host"] = e.host;
        j["severity"] = e.severity;
        j["facility"] = e.facility;
        j["syslogtag"] = e.syslogtag;
        j["name"] = e.name;
        if (e.pid) j["pid"] = *e.pid;
        else j["pid"] = nullptr;
        j["raw_message"] = e.raw_message;
        out << j.dump() << "\n";
    }
}

Repository Repository::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open siem file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw CodecError("siem file empty: " + path);
    nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
    if (header.is_discarded() || header.value("kind", "") != "siem" ||
        header.value("schema_version", 0) != 1)
        throw CodecError("siem file header invalid: " + path);

    Repository repo(header.at("daily_quota_bytes").get<std::int64_t>(),
                    header.at("retention_days").get<int>());
    repo.now_ = header.at("now_us").get<Micros>();
    repo.accepted_total_ = header.at("accepted").get<std::int64_t>();
    repo.rejected_total_ = header.at("rejected_over_quota").get<std::int64_t>();
    repo.malformed_total_ = header.at("malformed").get<std::int64_t>();
    for (const auto& [day, bytes] : header.at("bytes_by_day").items())
        repo.bytes_by_day_[std::stoll(day)] = bytes.get<std::int64_t>();

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw CodecError("siem file row invalid: " + path);
        SiemEvent e;
        e.ingest_ts = j.at("ingest_ts_us").get<Micros>();
        e.event_ts = j.at("event_ts_us").get<Micros>();
        e.host = j.at("host").get<std::string>();
        e.severity = j.at("severity").get<std::string>();
        e.facility = j.at("facility").get<std::string>();
        e.syslogtag = j.at("syslogtag").get<std::string>();
        e.name = j.at("name").get<std::string>();
        if (!j.at("pid").is_null()) e.pid = j.at("pid").get<int>();
        e.raw_message = j.at("raw_message").get<std::string>();
        e.alert = parse_alert_body(e.raw_message);
        repo.events_.push_back(std::move(e));
    }
    return repo;
}

}  // namespace cids::siem
