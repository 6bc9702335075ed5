#include "cids/harness.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <variant>

#include <nlohmann/json.hpp>

#include "cids/errors.hpp"
#include "cids/rules.hpp"
#include "cids/store.hpp"
#include "cids/syslog.hpp"
#include "cids/traffic.hpp"

namespace cids::harness {
namespace {

namespace fs = std::filesystem;

std::uint64_t mix_seed(std::uint64_t seed, const std::string& salt) {
    std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ULL;
    for (unsigned char c : salt) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Ipv4 resolve_endpoint(const netsim::LanSegment& lan, const std::string& name,
                      const std::string& context) {
    const auto* ep = lan.find_by_name(name);
    if (!ep) throw ConfigError(context + ": unknown endpoint \"" + name + "\"");
    return ep->ip;
}

std::vector<PacketRecord> generate_packets(const scenario::ScenarioConfig& cfg,
                                           const netsim::LanSegment& lan) {
    std::vector<PacketRecord> packets;
    for (std::size_t i = 0; i < cfg.attacks.size(); ++i) {
        const auto& a = cfg.attacks[i];
        const Ipv4 src = resolve_endpoint(lan, a.src, "attacks[" + std::to_string(i) + "].src");
        std::vector<Ipv4> targets;
        for (const auto& t : a.targets)
            targets.push_back(
                resolve_endpoint(lan, t, "attacks[" + std::to_string(i) + "].targets"));
        const Micros start = micros_from_seconds(a.start_s);

        std::vector<PacketRecord> stream;
        switch (a.kind) {
            case AttackKind::port_scan: {
                traffic::ScanSpec spec;
                spec.attack_id = a.id;
                spec.src = src;
                spec.targets = targets;
                for (int p = a.port_lo; p <= a.port_hi; ++p)
                    spec.ports.push_back(static_cast<std::uint16_t>(p));
                spec.rate = a.rate;
                spec.start = start;
                stream = traffic::gen_port_scan(spec);
                break;
            }
            case AttackKind::icmp_flood: {
                traffic::FloodSpec spec;
                spec.attack_id = a.id;
                spec.src = src;
                spec.targets = targets;
                spec.rate = a.rate;
                spec.duration_s = a.duration_s;
                spec.start = start;
                spec.icmp_type = a.icmp_type;
                stream = traffic::gen_icmp_flood(spec);
                break;
            }
            case AttackKind::dns_enum: {
                traffic::DnsEnumSpec spec;
                spec.attack_id = a.id;
                spec.src = src;
                spec.server = targets.at(0);
                spec.n_names = a.n_names;
                spec.nx_fraction = a.nx_fraction;
                spec.rate = a.rate;
                spec.start = start;
                spec.resp_delay = micros_from_seconds(a.resp_delay_ms / 1e3);
                spec.seed = mix_seed(cfg.seed, "attack:" + a.id);
                stream = traffic::gen_dns_enum(spec);
                break;
            }
            case AttackKind::benign:
                break;
        }
        packets.insert(packets.end(), stream.begin(), stream.end());
    }

    if (cfg.benign.rate > 0) {
        traffic::BenignSpec spec;
        spec.rate = cfg.benign.rate;
        spec.duration_s = cfg.benign.duration_s;
        spec.start = micros_from_seconds(cfg.benign.start_s);
        spec.sub_threshold = cfg.benign.sub_threshold;
        spec.flood_count = cfg.benign.flood_count;
        spec.flood_seconds = cfg.benign.flood_seconds;
        spec.wan_fraction = cfg.benign.wan_fraction;
        spec.seed = mix_seed(cfg.seed, "benign");
        auto stream = traffic::gen_benign(spec, lan.endpoints());
        packets.insert(packets.end(), stream.begin(), stream.end());
    }

    std::stable_sort(packets.begin(), packets.end(),
                     [](const PacketRecord& a, const PacketRecord& b) { return a.ts < b.ts; });
    return packets;
}

std::vector<Delivery> classify_packets(const netsim::LanSegment& lan,
                                       netsim::FirewallPolicy& firewall,
                                       std::vector<PacketRecord> packets, NetCounters& counters) {
    std::vector<Delivery> out;
    out.reserve(packets.size());
    for (std::size_t i = 0; i < packets.size(); ++i) {
        Delivery d;
        d.seq = static_cast<std::int64_t>(i);
        d.pkt = std::move(packets[i]);
        ++counters.generated;
        if (lan.on_subnet(d.pkt.dst_ip)) {
            for (const auto* ep : lan.deliver(d.pkt)) d.receivers.push_back(ep->name);
            if (d.receivers.empty()) {
                d.kind = Delivery::Kind::absent;
                ++counters.absent;
            } else {
                d.kind = Delivery::Kind::delivery;
                ++counters.delivered;
            }
        } else {
            // WAN-bound. On a hub the frames still cross the local wire before
            // the gateway decides, so promiscuous sensors may observe them.
            if (lan.mode() == netsim::LanMode::hub)
                for (const auto* ep : lan.deliver(d.pkt)) d.receivers.push_back(ep->name);
            if (firewall.egress_check(d.pkt) == netsim::FirewallPolicy::Verdict::allow) {
                d.kind = Delivery::Kind::delivery;
                ++counters.delivered;
            } else {
                d.kind = Delivery::Kind::fw_drop;
                ++counters.fw_dropped;
            }
        }
        out.push_back(std::move(d));
    }
    return out;
}

struct PipelineOutput {
    std::vector<sensor::Alert> alerts;
    store::EventStore events;
    siem::Repository repo{std::int64_t{16} * (1 << 30), 7};
    std::map<std::string, ForwarderStats> forwarder_per_node;
    std::int64_t receiver_malformed = 0;
    Micros end_ts = 0;
    std::map<std::int64_t, std::map<std::string, std::int64_t>> alert_buckets;  // second -> node
    std::map<std::string, std::vector<std::string>> mirror_lines;
};

PipelineOutput run_pipeline(const scenario::ScenarioConfig& cfg, const netsim::LanSegment& lan,
                            const std::vector<Delivery>& deliveries) {
    PipelineOutput out;
    out.repo = siem::Repository(cfg.siem.daily_quota_bytes, cfg.siem.retention_days);

    rules::Ruleset ruleset = rules::load_ruleset(cfg.ruleset_lines);
    sensor::ClasstypePriorityTable priorities;
    for (const auto& [name, prio] : cfg.classtype_priority) priorities.set(name, prio);

    const Ipv4 central_ip = resolve_endpoint(lan, "central", "topology");

    std::map<std::string, sensor::Sensor> sensors;
    std::map<std::string, syslog::Forwarder> forwarders;
    int node_index = 0;
    for (const auto& ep : lan.endpoints()) {
        if (ep.role != netsim::Role::sensor) continue;
        ++node_index;
        sensor::SensorConfig scfg;
        scfg.node = ep;
        scfg.forward_to = central_ip;
        sensors.emplace(ep.name, sensor::Sensor(std::move(scfg), ruleset, priorities));

        syslog::ForwarderConfig fcfg;
        fcfg.dest_ip = central_ip;
        fcfg.transport = cfg.forwarder.transport;
        fcfg.port = cfg.forwarder.port;
        fcfg.rate_limit = cfg.forwarder.rate_limit;
        fcfg.udp_drop_prob = cfg.forwarder.udp_drop_prob;
        fcfg.hostname = ep.name;
        fcfg.pid = cfg.forwarder.pid_base + node_index;
        forwarders.emplace(ep.name, syslog::Forwarder(fcfg, mix_seed(cfg.seed, "fwd:" + ep.name)));
    }

    std::vector<std::string> pending;
    pending.reserve(static_cast<std::size_t>(cfg.siem.batch_lines));

    syslog::CentralReceiver receiver;
    struct FlushState {
        PipelineOutput* out;
        std::vector<std::string>* pending;
        int batch_lines;
    } flush_state{&out, &pending, cfg.siem.batch_lines};
    receiver.add_handler([&flush_state](const syslog::SyslogMessage& m, Micros received_at) {
        auto& o = *flush_state.out;
        o.events.insert(m, received_at);
        flush_state.pending->push_back(store::EventStore::export_line(o.events.rows().back()));
        if (static_cast<int>(flush_state.pending->size()) >= flush_state.batch_lines) {
            o.repo.ingest_bulk(*flush_state.pending, received_at);
            flush_state.pending->clear();
        }
    });

    struct PacketEvent {
        std::size_t delivery;
        std::size_t receiver;
    };
    struct FrameEvent {
        std::string frame;
    };
    using Payload = std::variant<PacketEvent, FrameEvent>;
    netsim::EventLoop<Payload> loop;

    Micros max_pkt_ts = 0;
    for (std::size_t i = 0; i < deliveries.size(); ++i) {
        const auto& d = deliveries[i];
        max_pkt_ts = std::max(max_pkt_ts, d.pkt.ts);
        if (d.receivers.empty()) continue;
        const auto* src_ep = lan.find_by_ip(d.pkt.src_ip);
        const std::string sender = src_ep ? src_ep->name : d.pkt.src_ip.str();
        for (std::size_t r = 0; r < d.receivers.size(); ++r)
            loop.schedule(d.pkt.ts + lan.latency(), sender, PacketEvent{i, r});
    }

    while (auto ev = loop.step()) {
        if (auto* pe = std::get_if<PacketEvent>(&ev->payload)) {
            const Delivery& d = deliveries[pe->delivery];
            const std::string& receiver_name = d.receivers[pe->receiver];
            auto sit = sensors.find(receiver_name);
            if (sit == sensors.end()) continue;  // central/gateway/attacker ignore packets

            auto alerts = sit->second.process(d.pkt, d.seq, lan.mode());
            for (auto& alert : alerts) {
                out.alert_buckets[alert.ts / kMicrosPerSecond][alert.node] += 1;
                const std::string body = sensor::format_alert(alert);
                if (cfg.mirror_alerts) {
                    nlohmann::ordered_json line;
                    line["ts_us"] = alert.ts;
                    line["body"] = body;
                    out.mirror_lines[alert.node].push_back(line.dump());
                }
                auto frame = forwarders.at(alert.node).forward(body, loop.now());
                if (frame)
                    loop.schedule(loop.now() + lan.latency(), alert.node,
                                  FrameEvent{std::move(*frame)});
                out.alerts.push_back(std::move(alert));
            }
        } else if (auto* fe = std::get_if<FrameEvent>(&ev->payload)) {
            receiver.receive_frame(fe->frame, loop.now(), cfg.forwarder.transport);
        }
    }

    out.end_ts = std::max(loop.now(), max_pkt_ts + lan.latency());
    if (!pending.empty()) {
        out.repo.ingest_bulk(pending, out.end_ts);
        pending.clear();
    }
    out.repo.seek(out.end_ts);
    out.receiver_malformed = static_cast<std::int64_t>(receiver.malformed());

    for (const auto& [name, fwd] : forwarders) {
        ForwarderStats stats;
        stats.offered = static_cast<std::int64_t>(fwd.offered());
        stats.sent = static_cast<std::int64_t>(fwd.sent());
        stats.dropped = static_cast<std::int64_t>(fwd.dropped());
        out.forwarder_per_node[name] = stats;
    }
    return out;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path);
    for (const auto& line : lines) f << line << "\n";
}

const char* delivery_kind_name(Delivery::Kind k) {
    switch (k) {
        case Delivery::Kind::delivery: return "delivery";
        case Delivery::Kind::fw_drop: return "fw_drop";
        case Delivery::Kind::absent: return "absent";
    }
    return "?";
}

Delivery::Kind delivery_kind_from_name(const std::string& s) {
    if (s == "delivery") return Delivery::Kind::delivery;
    if (s == "fw_drop") return Delivery::Kind::fw_drop;
    if (s == "absent") return Delivery::Kind::absent;
    throw CodecError("trace: unknown record kind \"" + s + "\"");
}

void write_trace(const std::string& path, const scenario::ScenarioConfig& cfg,
                 const std::vector<Delivery>& deliveries) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path);
    nlohmann::ordered_json header;
    header["schema_version"] = 1;
    header["kind"] = "trace";
    header["scenario"] = scenario::resolved_json(cfg);
    f << header.dump() << "\n";
    for (const auto& d : deliveries) {
        nlohmann::ordered_json j;
        j["kind"] = delivery_kind_name(d.kind);
        j["seq"] = d.seq;
        j["receivers"] = d.receivers;
        nlohmann::json pkt;
        to_json(pkt, d.pkt);
        j["pkt"] = pkt;
        f << j.dump() << "\n";
    }
}

MetricsReport build_metrics(const scenario::ScenarioConfig& cfg, const NetCounters& counters,
                            const std::vector<Delivery>& deliveries, PipelineOutput& pipe) {
    MetricsReport m;
    m.scenario_id = cfg.id;
    m.seed = cfg.seed;
    m.net = counters;
    m.alerts_total = static_cast<std::int64_t>(pipe.alerts.size());
    for (const auto& a : pipe.alerts) {
        m.alerts_per_node[a.node] += 1;
        m.per_sid_alerts[a.sid] += 1;
    }
    for (const auto& [name, stats] : pipe.forwarder_per_node) {
        m.forwarder_per_node[name] = stats;
        m.forwarder.offered += stats.offered;
        m.forwarder.sent += stats.sent;
        m.forwarder.dropped += stats.dropped;
    }
    m.receiver_malformed = pipe.receiver_malformed;
    m.db_rows = pipe.events.row_count();
    m.siem_events = pipe.repo.accepted_total();
    m.siem_rejected = pipe.repo.rejected_total();
    m.siem_malformed = pipe.repo.malformed_total();
    m.meta_alerts = pipe.repo.correlate(
        {cfg.siem.correlation_window_s, cfg.siem.correlation_min_nodes});
    m.end_ts = pipe.end_ts;

    ScoreResult score = score_alerts(cfg, deliveries, pipe.alerts);
    m.tp = score.tp;
    m.fp = score.fp;
    m.fn = score.fn;
    m.flows = score.flows;
    m.flows_detected = score.flows_detected;
    m.detection_rate = score.detection_rate;
    m.first_latency_s = score.first_latency_s;
    return m;
}

// Returns the end-to-end wall time, stamped once every bulk artifact is on
// disk (only the two small report files follow).
double write_artifacts(const std::string& out_dir, const scenario::ScenarioConfig& cfg,
                       const std::vector<Delivery>& deliveries, PipelineOutput& pipe,
                       const MetricsReport& metrics,
                       std::chrono::steady_clock::time_point wall_start,
                       const netsim::LanSegment& lan) {
    fs::create_directories(out_dir);
    {
        std::ofstream f(out_dir + "/scenario_resolved.json", std::ios::binary);
        f << scenario::resolved_json(cfg).dump(2) << "\n";
    }
    write_trace(out_dir + "/trace.ndjson", cfg, deliveries);
    pipe.events.save(out_dir + "/store.ndjson");
    write_lines(out_dir + "/export.ndjson", pipe.events.export_ndjson());
    pipe.repo.save(out_dir + "/siem_events.ndjson");

    // Per-second alert counts per sensor node, plot-ready.
    {
        std::ofstream f(out_dir + "/alerts_per_node.csv", std::ios::binary);
        std::vector<std::string> nodes;
        for (const auto& ep : lan.endpoints())
            if (ep.role == netsim::Role::sensor) nodes.push_back(ep.name);
        f << "second";
        for (const auto& n : nodes) f << "," << n;
        f << "\n";
        const std::int64_t last_second = metrics.end_ts / kMicrosPerSecond;
        for (std::int64_t s = 0; s <= last_second; ++s) {
            f << s;
            auto bucket = pipe.alert_buckets.find(s);
            for (const auto& n : nodes) {
                std::int64_t count = 0;
                if (bucket != pipe.alert_buckets.end()) {
                    auto it = bucket->second.find(n);
                    if (it != bucket->second.end()) count = it->second;
                }
                f << "," << count;
            }
            f << "\n";
        }
    }

    if (cfg.mirror_alerts) {
        fs::create_directories(out_dir + "/snort_logs");
        for (const auto& [node, lines] : pipe.mirror_lines)
            write_lines(out_dir + "/snort_logs/" + node + ".ndjson", lines);
    }

    const double wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    nlohmann::ordered_json report = report_json(metrics);
    {
        std::ofstream f(out_dir + "/report.json", std::ios::binary);
        f << report.dump(2) << "\n";
    }
    {
        std::ofstream f(out_dir + "/report.txt", std::ios::binary);
        f << report_text(report, wall_seconds);
    }
    return wall_seconds;
}

RunResult run_from_deliveries(const scenario::ScenarioConfig& cfg,
                              const std::vector<Delivery>& deliveries,
                              const NetCounters& counters, const std::string& out_dir,
                              std::chrono::steady_clock::time_point wall_start) {
    netsim::LanSegment lan = scenario::build_lan(cfg);
    PipelineOutput pipe = run_pipeline(cfg, lan, deliveries);
    MetricsReport metrics = build_metrics(cfg, counters, deliveries, pipe);
    const double wall = write_artifacts(out_dir, cfg, deliveries, pipe, metrics, wall_start, lan);
    return {std::move(metrics), wall};
}

}  // namespace

ScoreResult score_alerts(const scenario::ScenarioConfig& cfg,
                         const std::vector<Delivery>& deliveries,
                         const std::vector<sensor::Alert>& alerts) {
    std::map<std::int64_t, const Delivery*> by_seq;
    for (const auto& d : deliveries) by_seq[d.seq] = &d;

    ScoreResult out;
    // attack id -> endpoint ips touched by some TP alert (either direction,
    // so response-triggered detections still credit the probed host).
    std::map<std::string, std::set<std::uint32_t>> detected;
    std::map<std::string, Micros> first_tp;

    for (const auto& a : alerts) {
        auto dit = by_seq.find(a.pkt_seq);
        if (dit == by_seq.end())
            throw ScoringError("alert references unknown packet seq " +
                               std::to_string(a.pkt_seq));
        if (!(dit->second->pkt.label == a.attack_label))
            throw ScoringError("alert label disagrees with trace for packet seq " +
                               std::to_string(a.pkt_seq));

        auto intent = cfg.intent.find(a.sid);
        const bool tp = intent != cfg.intent.end() &&
                        a.attack_label.kind == intent->second &&
                        a.attack_label.kind != AttackKind::benign;
        if (tp) {
            ++out.tp;
            detected[a.attack_label.attack_id].insert(a.src_ip.addr);
            detected[a.attack_label.attack_id].insert(a.dst_ip.addr);
            auto [it, fresh] = first_tp.emplace(a.attack_label.attack_id, a.ts);
            if (!fresh) it->second = std::min(it->second, a.ts);
        } else {
            ++out.fp;
        }
    }

    netsim::LanSegment lan = scenario::build_lan(cfg);
    for (const auto& attack : cfg.attacks) {
        for (const auto& target : attack.targets) {
            ++out.flows;
            const Ipv4 ip = resolve_endpoint(lan, target, "scoring");
            auto dit = detected.find(attack.id);
            if (dit != detected.end() && dit->second.count(ip.addr)) ++out.flows_detected;
        }
        auto fit = first_tp.find(attack.id);
        if (fit != first_tp.end())
            out.first_latency_s[attack.id] =
                seconds_from_micros(fit->second - micros_from_seconds(attack.start_s));
    }
    out.fn = out.flows - out.flows_detected;
    if (out.flows > 0)
        out.detection_rate =
            static_cast<double>(out.flows_detected) / static_cast<double>(out.flows);
    return out;
}

nlohmann::ordered_json report_json(const MetricsReport& m) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["scenario_id"] = m.scenario_id;
    j["seed"] = m.seed;
    j["packets"] = {{"generated", m.net.generated},
                    {"delivered", m.net.delivered},
                    {"fw_dropped", m.net.fw_dropped},
                    {"absent", m.net.absent}};
    j["alerts_total"] = m.alerts_total;
    nlohmann::ordered_json per_node = nlohmann::ordered_json::object();
    for (const auto& [node, count] : m.alerts_per_node) per_node[node] = count;
    j["alerts_per_node"] = per_node;
    nlohmann::ordered_json per_sid = nlohmann::ordered_json::object();
    for (const auto& [sid, count] : m.per_sid_alerts) per_sid[std::to_string(sid)] = count;
    j["per_sid_alerts"] = per_sid;
    j["db_rows"] = m.db_rows;
    j["forwarder"] = {{"offered", m.forwarder.offered},
                      {"sent", m.forwarder.sent},
                      {"dropped", m.forwarder.dropped}};
    nlohmann::ordered_json fwd_nodes = nlohmann::ordered_json::object();
    for (const auto& [node, stats] : m.forwarder_per_node)
        fwd_nodes[node] = {{"offered", stats.offered},
                           {"sent", stats.sent},
                           {"dropped", stats.dropped}};
    j["forwarder_per_node"] = fwd_nodes;
    j["receiver_malformed"] = m.receiver_malformed;
    j["siem"] = {{"events", m.siem_events},
                 {"rejected_over_quota", m.siem_rejected},
                 {"malformed", m.siem_malformed}};
    nlohmann::ordered_json metas = nlohmann::ordered_json::array();
    for (const auto& meta : m.meta_alerts) {
        nlohmann::ordered_json mj;
        mj["attacker_ip"] = meta.attacker_ip.str();
        mj["sid"] = meta.sid;
        mj["nodes"] = meta.nodes;
        mj["window"] = {{"start_s", seconds_from_micros(meta.window_start)},
                        {"end_s", seconds_from_micros(meta.window_end)}};
        mj["event_count"] = meta.event_count;
        metas.push_back(std::move(mj));
    }
    j["meta_alerts"] = metas;
    nlohmann::ordered_json scoring;
    scoring["tp"] = m.tp;
    scoring["fp"] = m.fp;
    scoring["fn"] = m.fn;
    scoring["flows"] = m.flows;
    scoring["flows_detected"] = m.flows_detected;
    if (m.detection_rate) scoring["detection_rate"] = *m.detection_rate;
    else scoring["detection_rate"] = "n/a";
    nlohmann::ordered_json latency = nlohmann::ordered_json::object();
    for (const auto& [id, s] : m.first_latency_s) latency[id] = s;
    scoring["first_detection_latency_s"] = latency;
    j["scoring"] = scoring;
    j["end_ts_s"] = seconds_from_micros(m.end_ts);
    return j;
}

std::string report_text(const nlohmann::ordered_json& r, std::optional<double> wall_seconds) {
    char buf[160];
    std::string out;
    out += "run summary: " + r.at("scenario_id").get<std::string>() + " (seed " +
           std::to_string(r.at("seed").get<std::uint64_t>()) + ")\n";
    const auto& p = r.at("packets");
    std::snprintf(buf, sizeof(buf),
                  "packets    generated %lld, delivered %lld, fw-dropped %lld, absent %lld\n",
                  static_cast<long long>(p.at("generated").get<std::int64_t>()),
                  static_cast<long long>(p.at("delivered").get<std::int64_t>()),
                  static_cast<long long>(p.at("fw_dropped").get<std::int64_t>()),
                  static_cast<long long>(p.at("absent").get<std::int64_t>()));
    out += buf;
    out += "alerts     total " + std::to_string(r.at("alerts_total").get<std::int64_t>()) + "\n";
    for (const auto& [node, count] : r.at("alerts_per_node").items())
        out += "             " + node + ": " + std::to_string(count.get<std::int64_t>()) + "\n";
    for (const auto& [sid, count] : r.at("per_sid_alerts").items())
        out += "             sid " + sid + ": " + std::to_string(count.get<std::int64_t>()) + "\n";
    const auto& f = r.at("forwarder");
    std::snprintf(buf, sizeof(buf), "forwarder  offered %lld, sent %lld, dropped %lld\n",
                  static_cast<long long>(f.at("offered").get<std::int64_t>()),
                  static_cast<long long>(f.at("sent").get<std::int64_t>()),
                  static_cast<long long>(f.at("dropped").get<std::int64_t>()));
    out += buf;
    out += "db rows    " + std::to_string(r.at("db_rows").get<std::int64_t>()) + "\n";
    const auto& s = r.at("siem");
    std::snprintf(buf, sizeof(buf), "siem       events %lld, over-quota %lld, malformed %lld\n",
                  static_cast<long long>(s.at("events").get<std::int64_t>()),
                  static_cast<long long>(s.at("rejected_over_quota").get<std::int64_t>()),
                  static_cast<long long>(s.at("malformed").get<std::int64_t>()));
    out += buf;
    out += "meta-alerts " + std::to_string(r.at("meta_alerts").size()) + "\n";
    for (const auto& meta : r.at("meta_alerts")) {
        out += "             sid " + std::to_string(meta.at("sid").get<int>()) + " from " +
               meta.at("attacker_ip").get<std::string>() + " across";
        for (const auto& n : meta.at("nodes")) out += " " + n.get<std::string>();
        std::snprintf(buf, sizeof(buf), " [%.3f s .. %.3f s], %lld events\n",
                      meta.at("window").at("start_s").get<double>(),
                      meta.at("window").at("end_s").get<double>(),
                      static_cast<long long>(meta.at("event_count").get<std::int64_t>()));
        out += buf;
    }
    const auto& sc = r.at("scoring");
    std::snprintf(buf, sizeof(buf), "scoring    tp %lld, fp %lld, fn %lld (flows %lld, detected %lld)\n",
                  static_cast<long long>(sc.at("tp").get<std::int64_t>()),
                  static_cast<long long>(sc.at("fp").get<std::int64_t>()),
                  static_cast<long long>(sc.at("fn").get<std::int64_t>()),
                  static_cast<long long>(sc.at("flows").get<std::int64_t>()),
                  static_cast<long long>(sc.at("flows_detected").get<std::int64_t>()));
    out += buf;
    if (sc.at("detection_rate").is_string())
        out += "detection  n/a (no attack flows)\n";
    else {
        std::snprintf(buf, sizeof(buf), "detection  rate %.4f\n",
                      sc.at("detection_rate").get<double>());
        out += buf;
    }
    for (const auto& [id, latency] : sc.at("first_detection_latency_s").items()) {
        std::snprintf(buf, sizeof(buf), "             first detection for %s after %.6f s\n",
                      id.c_str(), latency.get<double>());
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "virtual end %.6f s\n", r.at("end_ts_s").get<double>());
    out += buf;
    if (wall_seconds) {
        std::snprintf(buf, sizeof(buf), "wall time  %.3f s\n", *wall_seconds);
        out += buf;
    }
    return out;
}

RunResult run_scenario(const scenario::ScenarioConfig& cfg, const std::string& out_dir) {
    const auto wall_start = std::chrono::steady_clock::now();
    netsim::LanSegment lan = scenario::build_lan(cfg);
    netsim::FirewallPolicy firewall = scenario::build_firewall(cfg);
    NetCounters counters;
    std::vector<Delivery> deliveries =
        classify_packets(lan, firewall, generate_packets(cfg, lan), counters);
    return run_from_deliveries(cfg, deliveries, counters, out_dir, wall_start);
}

RunResult replay_trace(const std::string& trace_path, const std::string& out_dir) {
    const auto wall_start = std::chrono::steady_clock::now();
    std::ifstream in(trace_path, std::ios::binary);
    if (!in) throw ConfigError("cannot open trace file: " + trace_path);
    std::string line;
    if (!std::getline(in, line)) throw CodecError("trace file empty: " + trace_path);
    nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
    if (header.is_discarded() || header.value("kind", "") != "trace" ||
        header.value("schema_version", 0) != 1)
        throw CodecError("trace header invalid: " + trace_path);
    scenario::ScenarioConfig cfg = scenario::load_scenario_json(header.at("scenario"), "");

    NetCounters counters;
    std::vector<Delivery> deliveries;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw CodecError("trace record invalid: " + trace_path);
        Delivery d;
        d.kind = delivery_kind_from_name(j.at("kind").get<std::string>());
        d.seq = j.at("seq").get<std::int64_t>();
        d.receivers = j.at("receivers").get<std::vector<std::string>>();
        from_json(j.at("pkt"), d.pkt);
        ++counters.generated;
        switch (d.kind) {
            case Delivery::Kind::delivery: ++counters.delivered; break;
            case Delivery::Kind::fw_drop: ++counters.fw_dropped; break;
            case Delivery::Kind::absent: ++counters.absent; break;
        }
        deliveries.push_back(std::move(d));
    }
    return run_from_deliveries(cfg, deliveries, counters, out_dir, wall_start);
}

}  // namespace cids::harness
