#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cids/errors.hpp"
#include "cids/harness.hpp"
#include "cids/scenario.hpp"
#include "cids/siem.hpp"
#include "cids/store.hpp"

namespace fs = std::filesystem;
using namespace cids;

namespace {

int cmd_run(const std::string& scenario_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed) {
    scenario::ScenarioConfig cfg = scenario::load_scenario_file(scenario_path);
    if (seed) cfg.seed = *seed;
    harness::RunResult result = harness::run_scenario(cfg, out_dir);
    std::cout << harness::report_text(harness::report_json(result.metrics), result.wall_seconds);
    std::cout << "artifacts in " << out_dir << "\n";
    return 0;
}

int cmd_replay(const std::string& trace_path, std::optional<std::string> out_dir) {
    std::string out = out_dir ? *out_dir
                              : (fs::path(trace_path).parent_path() / "replay").string();
    harness::RunResult result = harness::replay_trace(trace_path, out);
    std::cout << harness::report_text(harness::report_json(result.metrics), result.wall_seconds);
    std::cout << "artifacts in " << out << "\n";
    return 0;
}

int cmd_query(const std::string& run_dir, const std::string& text) {
    siem::Repository repo = siem::Repository::load(run_dir + "/siem_events.ndjson");
    siem::QueryResult result = repo.run_query(siem::parse_query(text));
    if (result.scalar) {
        std::cout << *result.scalar << "\n";
    } else {
        for (const auto& [key, count] : result.groups) std::cout << key << "," << count << "\n";
    }
    return 0;
}

int cmd_report(const std::string& run_dir) {
    std::ifstream f(run_dir + "/report.json", std::ios::binary);
    if (!f) throw ConfigError("no report.json under " + run_dir);
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(f, nullptr, false);
    if (j.is_discarded()) throw CodecError("report.json is not valid JSON");
    std::cout << harness::report_text(j, std::nullopt);
    return 0;
}

int cmd_dump(const std::string& run_dir) {
    store::EventStore events = store::EventStore::load(run_dir + "/store.ndjson");
    std::cout << events.dump_sql();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic collaborative intrusion-detection emulation"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir, trace_path, run_dir, query_text;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> replay_out;
    bool sql = false;

    auto* run = app.add_subcommand("run", "execute a scenario end to end");
    run->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    run->add_option("--out", out_dir, "output directory for artifacts")->required();
    run->add_option("--seed", seed, "override the scenario seed");

    auto* replay = app.add_subcommand("replay", "re-run the pipeline from a recorded trace");
    replay->add_option("--trace", trace_path, "trace.ndjson from a previous run")->required();
    replay->add_option("--out", replay_out, "output directory (default: <trace dir>/replay)");

    auto* query = app.add_subcommand("query", "run a search over a run's SIEM events");
    query->add_option("--run", run_dir, "run output directory")->required();
    query->add_option("query", query_text, "pipeline, e.g. 'filter(sid=100001) | count(*)'")
        ->required();

    auto* report = app.add_subcommand("report", "print the run summary");
    report->add_option("--run", run_dir, "run output directory")->required();

    auto* dump = app.add_subcommand("dump", "dump the central store");
    dump->add_flag("--sql", sql, "emit SQL DDL + INSERT statements");
    dump->add_option("--run", run_dir, "run output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(scenario_path, out_dir, seed);
        if (replay->parsed()) return cmd_replay(trace_path, replay_out);
        if (query->parsed()) return cmd_query(run_dir, query_text);
        if (report->parsed()) return cmd_report(run_dir);
        if (dump->parsed()) {
            if (!sql) throw ConfigError("dump requires --sql (the only supported format)");
            return cmd_dump(run_dir);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const QueryError& e) {
        std::cerr << "query error: " << e.what() << "\n";
        return 2;
    } catch (const CodecError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const ScoringError& e) {
        std::cerr << "scoring violation: " << e.what() << "\n";
        return 3;
    } catch (const InvariantError& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
