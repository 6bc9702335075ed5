#include "cids/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "cids/errors.hpp"
#include "cids/rules.hpp"

namespace cids::scenario {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

void expect_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    for (const auto& item : j.items())
        if (!allowed.count(item.key())) fail(path + "." + item.key(), "unknown key");
}

std::int64_t get_int(const json& j, const std::string& path, const std::string& key,
                     std::int64_t fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer()) fail(path + "." + key, "expected an integer");
    return j.at(key).get<std::int64_t>();
}

double get_num(const json& j, const std::string& path, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) fail(path + "." + key, "expected a number");
    return j.at(key).get<double>();
}

bool get_bool(const json& j, const std::string& path, const std::string& key, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) fail(path + "." + key, "expected a boolean");
    return j.at(key).get<bool>();
}

std::string get_str(const json& j, const std::string& path, const std::string& key,
                    const char* fallback = nullptr) {
    if (!j.contains(key)) {
        if (fallback) return fallback;
        fail(path + "." + key, "required key missing");
    }
    if (!j.at(key).is_string()) fail(path + "." + key, "expected a string");
    return j.at(key).get<std::string>();
}

std::set<std::string> endpoint_names(int sensor_count) {
    std::set<std::string> names = {"gateway", "central", "attacker"};
    for (int i = 1; i <= sensor_count; ++i) names.insert("node" + std::to_string(i));
    return names;
}

AttackConfig load_attack(const json& j, const std::string& path, int sensor_count) {
    expect_object(j, path);
    check_keys(j, path,
               {"kind", "id", "src", "targets", "rate", "start_s", "ports", "duration_s",
                "icmp_type", "n_names", "nx_fraction", "resp_delay_ms"});
    AttackConfig a;
    const std::string kind = get_str(j, path, "kind");
    auto parsed = attack_kind_from_name(kind);
    if (!parsed || *parsed == AttackKind::benign) fail(path + ".kind", "unknown attack kind \"" + kind + "\"");
    a.kind = *parsed;
    a.id = get_str(j, path, "id");
    if (a.id.empty()) fail(path + ".id", "must be non-empty");
    a.src = get_str(j, path, "src", "attacker");
    a.rate = get_num(j, path, "rate", 1000);
    if (a.rate <= 0) fail(path + ".rate", "must be > 0");
    a.start_s = get_num(j, path, "start_s", 0);
    if (a.start_s < 0) fail(path + ".start_s", "must be >= 0");

    const auto names = endpoint_names(sensor_count);
    if (!names.count(a.src)) fail(path + ".src", "unknown endpoint \"" + a.src + "\"");
    if (!j.contains("targets") || !j.at("targets").is_array() || j.at("targets").empty())
        fail(path + ".targets", "expected a non-empty array");
    for (std::size_t i = 0; i < j.at("targets").size(); ++i) {
        const auto& t = j.at("targets")[i];
        const std::string tpath = path + ".targets[" + std::to_string(i) + "]";
        if (!t.is_string()) fail(tpath, "expected a string");
        const std::string name = t.get<std::string>();
        if (!names.count(name))
            fail(tpath, "unknown endpoint \"" + name + "\" (sensor_count " +
                            std::to_string(sensor_count) + ")");
        a.targets.push_back(name);
    }

    switch (a.kind) {
        case AttackKind::port_scan: {
            if (!j.contains("ports")) fail(path + ".ports", "required for port_scan");
            const auto& p = j.at("ports");
            expect_object(p, path + ".ports");
            check_keys(p, path + ".ports", {"lo", "hi"});
            a.port_lo = static_cast<int>(get_int(p, path + ".ports", "lo", 1));
            a.port_hi = static_cast<int>(get_int(p, path + ".ports", "hi", 1000));
            if (a.port_lo < 1 || a.port_hi > 65535 || a.port_lo > a.port_hi)
                fail(path + ".ports", "need 1 <= lo <= hi <= 65535");
            break;
        }
        case AttackKind::icmp_flood:
            a.duration_s = get_num(j, path, "duration_s", 60);
            if (a.duration_s <= 0) fail(path + ".duration_s", "must be > 0");
            a.icmp_type = static_cast<int>(get_int(j, path, "icmp_type", 8));
            break;
        case AttackKind::dns_enum:
            a.n_names = static_cast<int>(get_int(j, path, "n_names", 100));
            if (a.n_names < 1) fail(path + ".n_names", "must be >= 1");
            a.nx_fraction = get_num(j, path, "nx_fraction", 0.9);
            if (a.nx_fraction < 0 || a.nx_fraction > 1)
                fail(path + ".nx_fraction", "must be in [0,1]");
            a.resp_delay_ms = get_num(j, path, "resp_delay_ms", 1.0);
            if (a.resp_delay_ms < 0) fail(path + ".resp_delay_ms", "must be >= 0");
            if (a.targets.size() != 1)
                fail(path + ".targets", "dns_enum takes exactly one target (the DNS server)");
            break;
        case AttackKind::benign:
            break;  // rejected above
    }
    return a;
}

}  // namespace

ScenarioConfig load_scenario_json(const json& j, const std::string& base_dir) {
    expect_object(j, "scenario");
    check_keys(j, "scenario",
               {"schema_version", "id", "seed", "lan", "topology", "firewall", "ruleset",
                "attacks", "benign", "forwarder", "siem", "scoring", "classtype_priority",
                "mirror_alerts"});
    if (get_int(j, "scenario", "schema_version", 0) != 1)
        fail("scenario.schema_version", "expected 1");

    ScenarioConfig cfg;
    cfg.id = get_str(j, "scenario", "id");
    if (cfg.id.empty()) fail("scenario.id", "must be non-empty");
    if (!j.contains("seed")) fail("scenario.seed", "required key missing (runs must be seeded)");
    if (!j.at("seed").is_number_integer() || j.at("seed").get<std::int64_t>() < 0)
        fail("scenario.seed", "expected a non-negative integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();

    if (j.contains("lan")) {
        const auto& lan = j.at("lan");
        expect_object(lan, "scenario.lan");
        check_keys(lan, "scenario.lan", {"mode", "latency_us"});
        const std::string mode = get_str(lan, "scenario.lan", "mode", "switched");
        if (mode == "switched") cfg.lan_mode = netsim::LanMode::switched;
        else if (mode == "hub") cfg.lan_mode = netsim::LanMode::hub;
        else fail("scenario.lan.mode", "expected \"switched\" or \"hub\"");
        cfg.latency = get_int(lan, "scenario.lan", "latency_us", 0);
        if (cfg.latency < 0) fail("scenario.lan.latency_us", "must be >= 0");
    }

    if (j.contains("topology")) {
        const auto& topo = j.at("topology");
        expect_object(topo, "scenario.topology");
        check_keys(topo, "scenario.topology", {"sensor_count", "wan_hosts"});
        cfg.sensor_count = static_cast<int>(get_int(topo, "scenario.topology", "sensor_count", 1));
        if (topo.contains("wan_hosts")) {
            if (!topo.at("wan_hosts").is_array())
                fail("scenario.topology.wan_hosts", "expected an array");
            for (std::size_t i = 0; i < topo.at("wan_hosts").size(); ++i) {
                const auto& w = topo.at("wan_hosts")[i];
                const std::string wpath =
                    "scenario.topology.wan_hosts[" + std::to_string(i) + "]";
                expect_object(w, wpath);
                check_keys(w, wpath, {"name", "ip"});
                netsim::WanHost host;
                host.name = get_str(w, wpath, "name");
                auto ip = Ipv4::parse(get_str(w, wpath, "ip"));
                if (!ip) fail(wpath + ".ip", "bad IPv4 address");
                host.ip = *ip;
                cfg.wan_hosts.push_back(std::move(host));
            }
        }
    }
    if (cfg.sensor_count < 1 || cfg.sensor_count > 9)
        fail("scenario.topology.sensor_count", "must be in 1..9");
    if (cfg.wan_hosts.empty())
        cfg.wan_hosts.push_back({"siem-host", Ipv4::parse_or_throw("203.0.113.10")});

    if (j.contains("firewall")) {
        const auto& fw = j.at("firewall");
        expect_object(fw, "scenario.firewall");
        check_keys(fw, "scenario.firewall", {"egress_allow"});
        if (fw.contains("egress_allow")) {
            if (!fw.at("egress_allow").is_array())
                fail("scenario.firewall.egress_allow", "expected an array");
            for (std::size_t i = 0; i < fw.at("egress_allow").size(); ++i) {
                const auto& e = fw.at("egress_allow")[i];
                const std::string epath =
                    "scenario.firewall.egress_allow[" + std::to_string(i) + "]";
                expect_object(e, epath);
                check_keys(e, epath, {"host", "port"});
                netsim::EgressRule rule;
                rule.host = get_str(e, epath, "host");
                std::int64_t port = get_int(e, epath, "port", 0);
                if (port < 0 || port > 65535) fail(epath + ".port", "must be in 0..65535");
                rule.port = static_cast<std::uint16_t>(port);
                cfg.egress_allow.push_back(std::move(rule));
            }
        }
    } else {
        cfg.egress_allow.push_back({"siem-host", 443});
    }

    if (!j.contains("ruleset")) fail("scenario.ruleset", "required key missing");
    const auto& rs = j.at("ruleset");
    if (rs.is_array()) {
        for (std::size_t i = 0; i < rs.size(); ++i) {
            if (!rs[i].is_string())
                fail("scenario.ruleset[" + std::to_string(i) + "]", "expected a string");
            cfg.ruleset_lines.push_back(rs[i].get<std::string>());
        }
    } else if (rs.is_object()) {
        check_keys(rs, "scenario.ruleset", {"file"});
        std::string file = get_str(rs, "scenario.ruleset", "file");
        std::string full = file;
        if (!base_dir.empty() && !file.empty() && file[0] != '/') full = base_dir + "/" + file;
        std::ifstream in(full);
        if (!in) fail("scenario.ruleset.file", "cannot open \"" + full + "\"");
        std::string line;
        while (std::getline(in, line)) cfg.ruleset_lines.push_back(line);
    } else {
        fail("scenario.ruleset", "expected an array of rule lines or {\"file\": ...}");
    }
    rules::Ruleset parsed_rules;
    try {
        parsed_rules = rules::load_ruleset(cfg.ruleset_lines);
    } catch (const ConfigError& e) {
        fail("scenario.ruleset", e.what());
    }

    if (j.contains("attacks")) {
        if (!j.at("attacks").is_array()) fail("scenario.attacks", "expected an array");
        std::set<std::string> ids;
        for (std::size_t i = 0; i < j.at("attacks").size(); ++i) {
            auto a = load_attack(j.at("attacks")[i], "scenario.attacks[" + std::to_string(i) + "]",
                                 cfg.sensor_count);
            if (!ids.insert(a.id).second)
                fail("scenario.attacks[" + std::to_string(i) + "].id",
                     "duplicate attack id \"" + a.id + "\"");
            cfg.attacks.push_back(std::move(a));
        }
    }

    if (j.contains("benign")) {
        const auto& b = j.at("benign");
        expect_object(b, "scenario.benign");
        check_keys(b, "scenario.benign",
                   {"rate", "duration_s", "start_s", "sub_threshold", "flood_count",
                    "flood_seconds", "wan_fraction"});
        cfg.benign.rate = get_num(b, "scenario.benign", "rate", 0);
        if (cfg.benign.rate < 0) fail("scenario.benign.rate", "must be >= 0");
        cfg.benign.duration_s = get_num(b, "scenario.benign", "duration_s", 60);
        if (cfg.benign.duration_s <= 0) fail("scenario.benign.duration_s", "must be > 0");
        cfg.benign.start_s = get_num(b, "scenario.benign", "start_s", 0);
        if (cfg.benign.start_s < 0) fail("scenario.benign.start_s", "must be >= 0");
        cfg.benign.sub_threshold = get_bool(b, "scenario.benign", "sub_threshold", true);
        cfg.benign.flood_count =
            static_cast<int>(get_int(b, "scenario.benign", "flood_count", 150));
        if (cfg.benign.flood_count < 1) fail("scenario.benign.flood_count", "must be >= 1");
        cfg.benign.flood_seconds =
            static_cast<int>(get_int(b, "scenario.benign", "flood_seconds", 3));
        if (cfg.benign.flood_seconds < 1) fail("scenario.benign.flood_seconds", "must be >= 1");
        cfg.benign.wan_fraction = get_num(b, "scenario.benign", "wan_fraction", 0);
        if (cfg.benign.wan_fraction < 0 || cfg.benign.wan_fraction > 1)
            fail("scenario.benign.wan_fraction", "must be in [0,1]");
    }

    if (j.contains("forwarder")) {
        const auto& f = j.at("forwarder");
        expect_object(f, "scenario.forwarder");
        check_keys(f, "scenario.forwarder",
                   {"transport", "port", "rate_limit", "udp_drop_prob", "pid_base"});
        const std::string transport = get_str(f, "scenario.forwarder", "transport", "tcp");
        auto t = syslog::transport_from_name(transport);
        if (!t) fail("scenario.forwarder.transport", "expected \"tcp\" or \"udp\"");
        cfg.forwarder.transport = *t;
        std::int64_t port = get_int(f, "scenario.forwarder", "port", 514);
        if (port < 1 || port > 65535) fail("scenario.forwarder.port", "must be in 1..65535");
        cfg.forwarder.port = static_cast<std::uint16_t>(port);
        if (f.contains("rate_limit") && !f.at("rate_limit").is_null()) {
            const auto& r = f.at("rate_limit");
            expect_object(r, "scenario.forwarder.rate_limit");
            check_keys(r, "scenario.forwarder.rate_limit", {"interval_s", "burst"});
            syslog::RateLimitSpec spec;
            spec.interval_s = get_int(r, "scenario.forwarder.rate_limit", "interval_s", 1);
            if (spec.interval_s < 1)
                fail("scenario.forwarder.rate_limit.interval_s", "must be >= 1");
            spec.burst = static_cast<int>(get_int(r, "scenario.forwarder.rate_limit", "burst", 1));
            if (spec.burst < 1) fail("scenario.forwarder.rate_limit.burst", "must be >= 1");
            cfg.forwarder.rate_limit = spec;
        }
        cfg.forwarder.udp_drop_prob = get_num(f, "scenario.forwarder", "udp_drop_prob", 0);
        if (cfg.forwarder.udp_drop_prob < 0 || cfg.forwarder.udp_drop_prob > 1)
            fail("scenario.forwarder.udp_drop_prob", "must be in [0,1]");
        cfg.forwarder.pid_base = static_cast<int>(get_int(f, "scenario.forwarder", "pid_base", 700));
        if (cfg.forwarder.pid_base < 0) fail("scenario.forwarder.pid_base", "must be >= 0");
    }

    if (j.contains("siem")) {
        const auto& s = j.at("siem");
        expect_object(s, "scenario.siem");
        check_keys(s, "scenario.siem",
                   {"daily_quota_bytes", "retention_days", "batch_lines", "correlation"});
        cfg.siem.daily_quota_bytes =
            get_int(s, "scenario.siem", "daily_quota_bytes", cfg.siem.daily_quota_bytes);
        if (cfg.siem.daily_quota_bytes < 0)
            fail("scenario.siem.daily_quota_bytes", "must be >= 0");
        cfg.siem.retention_days =
            static_cast<int>(get_int(s, "scenario.siem", "retention_days", 7));
        if (cfg.siem.retention_days < 1) fail("scenario.siem.retention_days", "must be >= 1");
        cfg.siem.batch_lines = static_cast<int>(get_int(s, "scenario.siem", "batch_lines", 200));
        if (cfg.siem.batch_lines < 1) fail("scenario.siem.batch_lines", "must be >= 1");
        if (s.contains("correlation")) {
            const auto& c = s.at("correlation");
            expect_object(c, "scenario.siem.correlation");
            check_keys(c, "scenario.siem.correlation", {"window_s", "min_nodes"});
            cfg.siem.correlation_window_s =
                get_int(c, "scenario.siem.correlation", "window_s", 60);
            if (cfg.siem.correlation_window_s < 1)
                fail("scenario.siem.correlation.window_s", "must be >= 1");
            cfg.siem.correlation_min_nodes =
                static_cast<int>(get_int(c, "scenario.siem.correlation", "min_nodes", 3));
            if (cfg.siem.correlation_min_nodes < 2)
                fail("scenario.siem.correlation.min_nodes", "must be >= 2");
        }
    }

    if (j.contains("scoring")) {
        const auto& s = j.at("scoring");
        expect_object(s, "scenario.scoring");
        check_keys(s, "scenario.scoring", {"intent"});
        if (s.contains("intent")) {
            expect_object(s.at("intent"), "scenario.scoring.intent");
            for (const auto& item : s.at("intent").items()) {
                const std::string ipath = "scenario.scoring.intent." + item.key();
                int sid = 0;
                try {
                    sid = std::stoi(item.key());
                } catch (...) {
                    fail(ipath, "key must be a sid");
                }
                if (!item.value().is_string()) fail(ipath, "expected an attack kind string");
                auto kind = attack_kind_from_name(item.value().get<std::string>());
                if (!kind || *kind == AttackKind::benign)
                    fail(ipath, "unknown attack kind \"" + item.value().get<std::string>() + "\"");
                bool known = std::any_of(parsed_rules.rules.begin(), parsed_rules.rules.end(),
                                         [&](const rules::DetectionRule& r) { return r.sid == sid; });
                if (!known) fail(ipath, "sid not present in ruleset");
                cfg.intent[sid] = *kind;
            }
        }
    }

    if (j.contains("classtype_priority")) {
        expect_object(j.at("classtype_priority"), "scenario.classtype_priority");
        for (const auto& item : j.at("classtype_priority").items()) {
            if (!item.value().is_number_integer() || item.value().get<int>() < 0)
                fail("scenario.classtype_priority." + item.key(),
                     "expected a non-negative integer");
            cfg.classtype_priority[item.key()] = item.value().get<int>();
        }
    }

    cfg.mirror_alerts = get_bool(j, "scenario", "mirror_alerts", false);
    return cfg;
}

ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("scenario file is not valid JSON: " + path);
    auto slash = path.rfind('/');
    std::string base_dir = slash == std::string::npos ? "." : path.substr(0, slash);
    return load_scenario_json(j, base_dir);
}

nlohmann::ordered_json resolved_json(const ScenarioConfig& cfg) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["id"] = cfg.id;
    j["seed"] = cfg.seed;
    j["lan"] = {{"mode", cfg.lan_mode == netsim::LanMode::hub ? "hub" : "switched"},
                {"latency_us", cfg.latency}};
    nlohmann::ordered_json wan = nlohmann::ordered_json::array();
    for (const auto& w : cfg.wan_hosts) wan.push_back({{"name", w.name}, {"ip", w.ip.str()}});
    j["topology"] = {{"sensor_count", cfg.sensor_count}, {"wan_hosts", wan}};
    nlohmann::ordered_json allow = nlohmann::ordered_json::array();
    for (const auto& e : cfg.egress_allow) allow.push_back({{"host", e.host}, {"port", e.port}});
    j["firewall"] = {{"egress_allow", allow}};
    j["ruleset"] = cfg.ruleset_lines;
    nlohmann::ordered_json attacks = nlohmann::ordered_json::array();
    for (const auto& a : cfg.attacks) {
        nlohmann::ordered_json aj;
        aj["kind"] = attack_kind_name(a.kind);
        aj["id"] = a.id;
        aj["src"] = a.src;
        aj["targets"] = a.targets;
        aj["rate"] = a.rate;
        aj["start_s"] = a.start_s;
        switch (a.kind) {
            case AttackKind::port_scan:
                aj["ports"] = {{"lo", a.port_lo}, {"hi", a.port_hi}};
                break;
            case AttackKind::icmp_flood:
                aj["duration_s"] = a.duration_s;
                aj["icmp_type"] = a.icmp_type;
                break;
            case AttackKind::dns_enum:
                aj["n_names"] = a.n_names;
                aj["nx_fraction"] = a.nx_fraction;
                aj["resp_delay_ms"] = a.resp_delay_ms;
                break;
            case AttackKind::benign:
                break;
        }
        attacks.push_back(std::move(aj));
    }
    j["attacks"] = attacks;
    j["benign"] = {{"rate", cfg.benign.rate},
                   {"duration_s", cfg.benign.duration_s},
                   {"start_s", cfg.benign.start_s},
                   {"sub_threshold", cfg.benign.sub_threshold},
                   {"flood_count", cfg.benign.flood_count},
                   {"flood_seconds", cfg.benign.flood_seconds},
                   {"wan_fraction", cfg.benign.wan_fraction}};
    nlohmann::ordered_json fwd;
    fwd["transport"] = syslog::transport_name(cfg.forwarder.transport);
    fwd["port"] = cfg.forwarder.port;
    if (cfg.forwarder.rate_limit)
        fwd["rate_limit"] = {{"interval_s", cfg.forwarder.rate_limit->interval_s},
                             {"burst", cfg.forwarder.rate_limit->burst}};
    fwd["udp_drop_prob"] = cfg.forwarder.udp_drop_prob;
    fwd["pid_base"] = cfg.forwarder.pid_base;
    j["forwarder"] = fwd;
    j["siem"] = {{"daily_quota_bytes", cfg.siem.daily_quota_bytes},
                 {"retention_days", cfg.siem.retention_days},
                 {"batch_lines", cfg.siem.batch_lines},
                 {"correlation",
                  {{"window_s", cfg.siem.correlation_window_s},
                   {"min_nodes", cfg.siem.correlation_min_nodes}}}};
    nlohmann::ordered_json intent = nlohmann::ordered_json::object();
    for (const auto& [sid, kind] : cfg.intent)
        intent[std::to_string(sid)] = attack_kind_name(kind);
    j["scoring"] = {{"intent", intent}};
    nlohmann::ordered_json prio = nlohmann::ordered_json::object();
    for (const auto& [name, p] : cfg.classtype_priority) prio[name] = p;
    j["classtype_priority"] = prio;
    j["mirror_alerts"] = cfg.mirror_alerts;
    return j;
}

netsim::LanSegment build_lan(const ScenarioConfig& cfg) {
    netsim::LanSegment lan(cfg.lan_mode, cfg.latency, Ipv4::parse_or_throw("192.168.1.0"), 24);
    lan.add_endpoint({"gateway", Ipv4::parse_or_throw("192.168.1.1"), netsim::Role::gateway});
    lan.add_endpoint({"central", Ipv4::parse_or_throw("192.168.1.13"), netsim::Role::central});
    lan.add_endpoint({"attacker", Ipv4::parse_or_throw("192.168.1.66"), netsim::Role::attacker});
    for (int i = 1; i <= cfg.sensor_count; ++i)
        lan.add_endpoint({"node" + std::to_string(i),
                          Ipv4::parse_or_throw("192.168.1." + std::to_string(100 + i)),
                          netsim::Role::sensor});
    return lan;
}

netsim::FirewallPolicy build_firewall(const ScenarioConfig& cfg) {
    return netsim::FirewallPolicy(cfg.egress_allow, cfg.wan_hosts);
}

}  // namespace cids::scenario
