#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cids/scenario.hpp"
#include "cids/sensor.hpp"
#include "cids/siem.hpp"

namespace cids::harness {

struct NetCounters {
    std::int64_t generated = 0;
    std::int64_t delivered = 0;     // reached >= 1 endpoint, or left via allowed egress
    std::int64_t fw_dropped = 0;    // off-LAN destination, denied
    std::int64_t absent = 0;        // switched unicast to a missing endpoint
};

// One generated packet with its L2 outcome. The trace stores exactly these, so
// a run can be replayed from the trace alone.
struct Delivery {
    enum class Kind { delivery, fw_drop, absent };
    std::int64_t seq = 0;
    Kind kind = Kind::delivery;
    PacketRecord pkt;
    std::vector<std::string> receivers;  // endpoint names, ordered
};

struct ForwarderStats {
    std::int64_t offered = 0;
    std::int64_t sent = 0;
    std::int64_t dropped = 0;
};

struct MetricsReport {
    std::string scenario_id;
    std::uint64_t seed = 0;
    NetCounters net;
    std::int64_t alerts_total = 0;
    std::map<std::string, std::int64_t> alerts_per_node;
    std::map<int, std::int64_t> per_sid_alerts;
    std::int64_t db_rows = 0;
    ForwarderStats forwarder;
    std::map<std::string, ForwarderStats> forwarder_per_node;
    std::int64_t receiver_malformed = 0;
    std::int64_t siem_events = 0;
    std::int64_t siem_rejected = 0;
    std::int64_t siem_malformed = 0;
    std::vector<siem::MetaAlert> meta_alerts;
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t flows = 0;
    std::int64_t flows_detected = 0;
    std::optional<double> detection_rate;  // nullopt renders as "n/a"
    std::map<std::string, double> first_latency_s;  // attack id -> seconds
    Micros end_ts = 0;
};

struct RunResult {
    MetricsReport metrics;
    double wall_seconds = 0;
};

// Deterministic end-to-end run; writes scenario_resolved.json, trace.ndjson,
// store.ndjson, export.ndjson, siem_events.ndjson, report.json, report.txt and
// alerts_per_node.csv into out_dir.
RunResult run_scenario(const scenario::ScenarioConfig& cfg, const std::string& out_dir);

// Re-runs the detection pipeline from a recorded trace; same artifacts.
RunResult replay_trace(const std::string& trace_path, const std::string& out_dir);

// Alert scoring against generator ground truth: an alert is TP iff its rule's
// declared intent (sid -> attack kind) matches the triggering packet's label;
// FN counts (attack, target) flows with no TP alert. Throws ScoringError when
// an alert references a packet the trace does not contain.
struct ScoreResult {
    std::int64_t tp = 0, fp = 0, fn = 0;
    std::int64_t flows = 0, flows_detected = 0;
    std::optional<double> detection_rate;
    std::map<std::string, double> first_latency_s;
};
ScoreResult score_alerts(const scenario::ScenarioConfig& cfg,
                         const std::vector<Delivery>& deliveries,
                         const std::vector<sensor::Alert>& alerts);

nlohmann::ordered_json report_json(const MetricsReport& m);
std::string report_text(const nlohmann::ordered_json& report, std::optional<double> wall_seconds);

}  // namespace cids::harness
