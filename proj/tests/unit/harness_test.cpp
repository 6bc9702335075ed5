#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cids/errors.hpp"
#include "cids/harness.hpp"

using namespace cids;
using namespace cids::harness;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

scenario::ScenarioConfig small_scenario() {
    json j = {
        {"schema_version", 1},
        {"id", "harness-small"},
        {"seed", 42},
        {"topology", {{"sensor_count", 2}}},
        {"ruleset",
         json::array({"alert tcp any any -> any any (msg:\"NMAP TCP SCAN\"; sid:10000005;)"})},
        {"attacks", json::array({{{"kind", "port_scan"},
                                  {"id", "scan1"},
                                  {"targets", json::array({"node1", "node2"})},
                                  {"rate", 1000},
                                  {"ports", {{"lo", 1}, {"hi", 40}}}}})},
        {"benign", {{"rate", 50}, {"duration_s", 2}, {"wan_fraction", 0.1}}},
        {"forwarder", {{"rate_limit", {{"interval_s", 1}, {"burst", 20}}}}},
        {"siem", {{"batch_lines", 7}}},
        {"scoring", {{"intent", {{"10000005", "port_scan"}}}}},
        {"mirror_alerts", true},
    };
    return scenario::load_scenario_json(j, "");
}

}  // namespace

TEST_CASE("an end-to-end run balances its own books") {
    const fs::path dir = fs::temp_directory_path() / "cids_harness_run";
    fs::remove_all(dir);
    auto cfg = small_scenario();
    auto result = run_scenario(cfg, dir.string());
    const auto& m = result.metrics;

    CHECK(m.scenario_id == "harness-small");
    CHECK(m.seed == 42);
    CHECK(m.net.generated > 0);
    CHECK(m.net.generated == m.net.delivered + m.net.fw_dropped + m.net.absent);
    CHECK(m.net.fw_dropped > 0);  // wan_fraction aims at a denied destination

    CHECK(m.alerts_total > 0);
    CHECK(m.alerts_total == m.tp + m.fp);
    CHECK(m.tp > 0);
    CHECK(m.fp > 0);  // the catch-all TCP rule also fires on benign traffic
    std::int64_t per_node = 0;
    for (const auto& [node, n] : m.alerts_per_node) per_node += n;
    CHECK(per_node == m.alerts_total);
    std::int64_t per_sid = 0;
    for (const auto& [sid, n] : m.per_sid_alerts) per_sid += n;
    CHECK(per_sid == m.alerts_total);

    // Every alert is offered to its forwarder; the burst cap bites.
    CHECK(m.forwarder.offered == m.alerts_total);
    CHECK(m.forwarder.sent + m.forwarder.dropped == m.forwarder.offered);
    CHECK(m.forwarder.dropped > 0);
    ForwarderStats sum;
    for (const auto& [node, s] : m.forwarder_per_node) {
        sum.offered += s.offered;
        sum.sent += s.sent;
        sum.dropped += s.dropped;
    }
    CHECK(sum.offered == m.forwarder.offered);
    CHECK(sum.sent == m.forwarder.sent);
    CHECK(sum.dropped == m.forwarder.dropped);

    // Store and SIEM sit downstream of the forwarders.
    CHECK(m.db_rows == m.forwarder.sent);
    CHECK(m.receiver_malformed == 0);
    CHECK(m.siem_events == m.db_rows);  // default quota never bites here
    CHECK(m.siem_rejected == 0);
    CHECK(m.siem_malformed == 0);

    CHECK(m.flows == 2);
    REQUIRE(m.detection_rate);
    CHECK(*m.detection_rate == 1.0);
    CHECK(m.fn == 0);
    REQUIRE(m.first_latency_s.count("scan1"));
    CHECK(m.first_latency_s.at("scan1") >= 0);
    CHECK(result.wall_seconds > 0);

    for (const char* name :
         {"scenario_resolved.json", "trace.ndjson", "store.ndjson", "export.ndjson",
          "siem_events.ndjson", "report.json", "report.txt", "alerts_per_node.csv",
          "snort_logs/node1.ndjson", "snort_logs/node2.ndjson"}) {
        CHECK_MESSAGE(fs::exists(dir / name), name);
    }

    // The trace holds the header plus one line per generated packet.
    std::istringstream trace(slurp(dir / "trace.ndjson"));
    std::int64_t lines = 0;
    std::string line;
    while (std::getline(trace, line)) ++lines;
    CHECK(lines == m.net.generated + 1);

    // report.json mirrors the in-memory metrics.
    json report = json::parse(slurp(dir / "report.json"));
    CHECK(report.at("alerts_total") == m.alerts_total);
    CHECK(report.at("packets").at("generated") == m.net.generated);
    CHECK(report.at("scoring").at("tp") == m.tp);
    CHECK(report.at("scoring").at("detection_rate") == 1.0);
    CHECK(report.at("db_rows") == m.db_rows);

    std::istringstream csv(slurp(dir / "alerts_per_node.csv"));
    std::getline(csv, line);
    CHECK(line == "second,node1,node2");
    std::int64_t csv_total = 0;
    while (std::getline(csv, line)) {
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');  // second column
        while (std::getline(row, cell, ',')) csv_total += std::stoll(cell);
    }
    CHECK(csv_total == m.alerts_total);

    fs::remove_all(dir);
}

TEST_CASE("identical seeds reproduce byte-identical artifacts and replay agrees") {
    const fs::path base = fs::temp_directory_path() / "cids_harness_det";
    fs::remove_all(base);
    auto cfg = small_scenario();
    run_scenario(cfg, (base / "a").string());
    run_scenario(cfg, (base / "b").string());
    CHECK(slurp(base / "a" / "report.json") == slurp(base / "b" / "report.json"));
    CHECK(slurp(base / "a" / "trace.ndjson") == slurp(base / "b" / "trace.ndjson"));
    CHECK(slurp(base / "a" / "store.ndjson") == slurp(base / "b" / "store.ndjson"));
    CHECK(slurp(base / "a" / "siem_events.ndjson") == slurp(base / "b" / "siem_events.ndjson"));

    replay_trace((base / "a" / "trace.ndjson").string(), (base / "replay").string());
    CHECK(slurp(base / "replay" / "report.json") == slurp(base / "a" / "report.json"));

    // A different seed shifts at least the benign stream.
    cfg.seed = 43;
    run_scenario(cfg, (base / "c").string());
    CHECK(slurp(base / "c" / "report.json") != slurp(base / "a" / "report.json"));
    fs::remove_all(base);
}

TEST_CASE("the shipped dns enumeration scenario pins its derived counts") {
    const fs::path dir = fs::temp_directory_path() / "cids_harness_dns";
    fs::remove_all(dir);
    auto cfg = scenario::load_scenario_file(CIDS_REPO_ROOT "/scenarios/tc5.json");
    const auto& m = run_scenario(cfg, dir.string()).metrics;

    // 100 probes, 90 NXDOMAIN responses, threshold "count 20, seconds 10":
    // responses 21..90 alert, on each of the three promiscuous hub sensors.
    CHECK(m.alerts_total == 210);
    for (const auto* node : {"node1", "node2", "node3"})
        CHECK(m.alerts_per_node.at(node) == 70);
    CHECK(m.per_sid_alerts.at(200001) == 210);
    CHECK(m.tp == 210);
    CHECK(m.fp == 0);
    REQUIRE(m.detection_rate);
    CHECK(*m.detection_rate == 1.0);

    // The NXDOMAIN surge rule keys on the responding resolver, so the
    // correlated "attacker" is the DNS server being abused.
    REQUIRE(m.meta_alerts.size() == 1);
    CHECK(m.meta_alerts[0].attacker_ip.str() == "192.168.1.1");
    CHECK(m.meta_alerts[0].sid == 200001);
    CHECK(m.meta_alerts[0].nodes == std::vector<std::string>{"node1", "node2", "node3"});
    CHECK(m.meta_alerts[0].event_count == 210);
    fs::remove_all(dir);
}

TEST_CASE("scoring separates intent hits from misses and tracks flows") {
    json j = {
        {"schema_version", 1},
        {"id", "score"},
        {"seed", 1},
        {"topology", {{"sensor_count", 2}}},
        {"ruleset",
         json::array(
             {"alert tcp any any -> any any (msg:\"NMAP TCP SCAN\"; sid:10000005;)",
              "alert icmp any any -> any any (msg:\"ICMP Flood Detected\"; sid:100001;)"})},
        {"attacks", json::array({{{"kind", "port_scan"},
                                  {"id", "scan1"},
                                  {"targets", json::array({"node1", "node2"})},
                                  {"start_s", 1.5},
                                  {"ports", {{"lo", 1}, {"hi", 10}}}}})},
        {"scoring",
         {{"intent", {{"10000005", "port_scan"}, {"100001", "icmp_flood"}}}}},
    };
    auto cfg = scenario::load_scenario_json(j, "");

    Delivery scan_pkt;
    scan_pkt.seq = 0;
    scan_pkt.pkt.proto = Proto::tcp;
    scan_pkt.pkt.src_ip = Ipv4::parse_or_throw("192.168.1.66");
    scan_pkt.pkt.dst_ip = Ipv4::parse_or_throw("192.168.1.101");
    scan_pkt.pkt.label = {AttackKind::port_scan, "scan1"};
    scan_pkt.receivers = {"node1"};
    Delivery benign_pkt = scan_pkt;
    benign_pkt.seq = 1;
    benign_pkt.pkt.label = {AttackKind::benign, ""};
    std::vector<Delivery> deliveries = {scan_pkt, benign_pkt};

    sensor::Alert hit;
    hit.ts = micros_from_seconds(2.25);
    hit.node = "node1";
    hit.sid = 10000005;
    hit.src_ip = scan_pkt.pkt.src_ip;
    hit.dst_ip = scan_pkt.pkt.dst_ip;
    hit.attack_label = scan_pkt.pkt.label;
    hit.pkt_seq = 0;
    sensor::Alert benign_hit = hit;  // same rule fired on background traffic
    benign_hit.pkt_seq = 1;
    benign_hit.attack_label = {AttackKind::benign, ""};
    sensor::Alert wrong_intent = hit;  // flood rule fired on a scan packet
    wrong_intent.sid = 100001;

    auto score = score_alerts(cfg, deliveries, {hit, benign_hit, wrong_intent});
    CHECK(score.tp == 1);
    CHECK(score.fp == 2);
    CHECK(score.flows == 2);           // scan1 declares node1 and node2
    CHECK(score.flows_detected == 1);  // only node1 saw a true positive
    CHECK(score.fn == 1);
    REQUIRE(score.detection_rate);
    CHECK(*score.detection_rate == 0.5);
    REQUIRE(score.first_latency_s.count("scan1"));
    CHECK(score.first_latency_s.at("scan1") == doctest::Approx(0.75));  // 2.25 - 1.5

    // No attacks configured: the rate is undefined, not zero.
    auto benign_only = cfg;
    benign_only.attacks.clear();
    auto na = score_alerts(benign_only, deliveries, {benign_hit});
    CHECK(na.flows == 0);
    CHECK(!na.detection_rate);
    MetricsReport m;
    m.detection_rate = na.detection_rate;
    CHECK(report_json(m).at("scoring").at("detection_rate") == "n/a");

    sensor::Alert phantom = hit;
    phantom.pkt_seq = 99;
    CHECK_THROWS_AS(score_alerts(cfg, deliveries, {phantom}), ScoringError);
    sensor::Alert mislabeled = hit;
    mislabeled.pkt_seq = 1;  // delivery 1 is benign but the alert claims scan1
    CHECK_THROWS_AS(score_alerts(cfg, deliveries, {mislabeled}), ScoringError);
}
