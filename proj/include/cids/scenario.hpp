#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cids/net.hpp"
#include "cids/packet.hpp"
#include "cids/syslog.hpp"

namespace cids::scenario {

struct AttackConfig {
    AttackKind kind = AttackKind::port_scan;
    std::string id;
    std::string src = "attacker";       // endpoint name
    std::vector<std::string> targets;   // endpoint names
    double rate = 1000;
    double start_s = 0;
    // port_scan
    int port_lo = 1;
    int port_hi = 1000;
    // icmp_flood
    double duration_s = 60;
    int icmp_type = 8;
    // dns_enum
    int n_names = 100;
    double nx_fraction = 0.9;
    double resp_delay_ms = 1.0;
};

struct BenignConfig {
    double rate = 0;
    double duration_s = 60;
    double start_s = 0;
    bool sub_threshold = true;
    int flood_count = 150;
    int flood_seconds = 3;
    double wan_fraction = 0;
};

struct ForwarderSettings {
    syslog::Transport transport = syslog::Transport::tcp;
    std::uint16_t port = 514;
    std::optional<syslog::RateLimitSpec> rate_limit;
    double udp_drop_prob = 0;
    int pid_base = 700;
};

struct SiemSettings {
    std::int64_t daily_quota_bytes = std::int64_t{16} * (1 << 30);
    int retention_days = 7;
    int batch_lines = 200;
    std::int64_t correlation_window_s = 60;
    int correlation_min_nodes = 3;
};

// Fully resolved run configuration. Loading validates everything and reports
// errors with config key paths; a resolved config serializes back to JSON so a
// trace alone can reproduce a run.
struct ScenarioConfig {
    std::string id;
    std::uint64_t seed = 0;
    netsim::LanMode lan_mode = netsim::LanMode::switched;
    Micros latency = 0;
    int sensor_count = 1;
    std::vector<netsim::WanHost> wan_hosts;
    std::vector<netsim::EgressRule> egress_allow;
    std::vector<std::string> ruleset_lines;
    std::vector<AttackConfig> attacks;
    BenignConfig benign;
    ForwarderSettings forwarder;
    SiemSettings siem;
    std::map<int, AttackKind> intent;  // sid -> attack kind the rule is meant to catch
    std::map<std::string, int> classtype_priority;
    bool mirror_alerts = false;
};

ScenarioConfig load_scenario_file(const std::string& path);

// base_dir resolves a relative ruleset file reference.
ScenarioConfig load_scenario_json(const nlohmann::json& j, const std::string& base_dir);

nlohmann::ordered_json resolved_json(const ScenarioConfig& cfg);

// Topology derived from the config: gateway .1, central .13, sensors
// node1..nodeN at .101.., attacker .66, all in 192.168.1.0/24.
netsim::LanSegment build_lan(const ScenarioConfig& cfg);

netsim::FirewallPolicy build_firewall(const ScenarioConfig& cfg);

}  // namespace cids::scenario
