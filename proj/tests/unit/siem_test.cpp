#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <random>

#include "cids/sensor.hpp"
#include "cids/siem.hpp"
#include "cids/store.hpp"

using namespace cids;
using namespace cids::siem;

namespace {

// Export-record line as the central store ships it.
std::string ship_line(const std::string& host, std::int64_t device_time_s,
                      const std::string& body, int pid = 701) {
    store::SystemEventRow row;
    row.id = 1;
    row.received_at = device_time_s * kMicrosPerSecond;
    row.device_time_s = device_time_s;
    row.facility = 23;
    row.priority = 1;
    row.from_host = host;
    row.syslog_tag = "snort[" + std::to_string(pid) + "]";
    row.message = body;
    return store::EventStore::export_line(row);
}

std::string flood_body(const std::string& dst) {
    return "[1:100001:1] \"ICMP Flood Detected\" {ICMP} 192.168.1.66 -> " + dst;
}

std::string scan_body(const std::string& dst, int dport) {
    return "[1:10000005:2] \"NMAP TCP Scan\" {TCP} 192.168.1.66:40000 -> " + dst + ":" +
           std::to_string(dport);
}

Repository fresh(std::int64_t quota = std::int64_t{16} * (1 << 30)) { return Repository(quota, 7); }

}  // namespace

TEST_CASE("alert bodies parse back to their structured form") {
    auto a = parse_alert_body(flood_body("192.168.1.101"));
    REQUIRE(a);
    CHECK(a->gid == 1);
    CHECK(a->sid == 100001);
    CHECK(a->rev == 1);
    CHECK(a->msg == "ICMP Flood Detected");
    CHECK(!a->classtype);
    CHECK(a->proto == Proto::icmp);
    CHECK(a->src_ip.str() == "192.168.1.66");
    CHECK(a->dst_ip.str() == "192.168.1.101");

    auto b = parse_alert_body(
        "[1:100001:1] \"ICMP Flood Detected\" [Classification: bad-unknown] [Priority: 2] "
        "{ICMP} 192.168.1.66 -> 192.168.1.101");
    REQUIRE(b);
    CHECK(b->classtype == "bad-unknown");
    CHECK(b->priority == 2);

    auto c = parse_alert_body(scan_body("192.168.1.101", 80));
    REQUIRE(c);
    CHECK(c->proto == Proto::tcp);
    CHECK(c->src_port == 40000);
    CHECK(c->dst_port == 80);

    CHECK(!parse_alert_body("mark"));
    CHECK(!parse_alert_body("[1:2:3] \"x\" {GRE} 1.2.3.4 -> 5.6.7.8"));
    CHECK(!parse_alert_body(flood_body("192.168.1.101") + " trailing"));
    CHECK(!parse_alert_body("[1:2] \"x\" {ICMP} 1.2.3.4 -> 5.6.7.8"));
}

TEST_CASE("alert body parsing inverts the sensor formatting for random alerts") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 300; ++i) {
        sensor::Alert a;
        a.gid = 1 + static_cast<int>(rng() % 5);
        a.sid = 1 + static_cast<int>(rng() % 1'000'000);
        a.rev = static_cast<int>(rng() % 4);
        a.msg = "msg " + std::to_string(rng() % 1000);
        if (rng() % 2) {
            a.classtype = "bad-unknown";
            a.priority = 1 + static_cast<int>(rng() % 4);
        }
        a.proto = static_cast<Proto>(rng() % 3);
        a.src_ip.addr = static_cast<std::uint32_t>(rng());
        a.dst_ip.addr = static_cast<std::uint32_t>(rng());
        if (a.proto != Proto::icmp) {
            a.src_port = static_cast<std::uint16_t>(rng());
            a.dst_port = static_cast<std::uint16_t>(rng());
        }
        auto parsed = parse_alert_body(sensor::format_alert(a));
        REQUIRE(parsed);
        CHECK(parsed->gid == a.gid);
        CHECK(parsed->sid == a.sid);
        CHECK(parsed->rev == a.rev);
        CHECK(parsed->msg == a.msg);
        CHECK(parsed->proto == a.proto);
        CHECK(parsed->src_ip == a.src_ip);
        CHECK(parsed->dst_ip == a.dst_ip);
        if (a.classtype) {
            CHECK(parsed->classtype == a.classtype);
            CHECK(parsed->priority == a.priority);
        }
        if (a.proto != Proto::icmp) {
            CHECK(parsed->src_port == a.src_port);
            CHECK(parsed->dst_port == a.dst_port);
        }
    }
}

TEST_CASE("bulk ingest accepts well-formed lines and counts junk") {
    Repository repo = fresh();
    auto res = repo.ingest_bulk(
        {ship_line("node1", 10, flood_body("192.168.1.101")), "not json at all",
         "{\"@timestamp\":\"2025-01-01T00:00:10+00:00\"}",  // missing keys
         ship_line("node1", 11, "mark")},
        20 * kMicrosPerSecond);
    CHECK(res.accepted == 2);
    CHECK(res.malformed == 2);
    CHECK(repo.accepted_total() == 2);
    CHECK(repo.malformed_total() == 2);
    REQUIRE(repo.events().size() == 2);
    CHECK(repo.events()[0].host == "node1");
    CHECK(repo.events()[0].event_ts == 10 * kMicrosPerSecond);
    CHECK(repo.events()[0].ingest_ts == 20 * kMicrosPerSecond);
    REQUIRE(repo.events()[0].alert);
    CHECK(repo.events()[0].alert->sid == 100001);
    CHECK(!repo.events()[1].alert);  // "mark" is stored but not alert-shaped
}

TEST_CASE("daily quota applies per byte with rejected lines uncharged") {
    const std::string line_a = ship_line("node1", 10, flood_body("192.168.1.101"));
    const std::string line_b = ship_line("node1", 11, flood_body("192.168.1.101") + " padding!!");
    const std::string line_c = ship_line("node1", 12, flood_body("192.168.1.101"));
    REQUIRE(line_b.size() > line_c.size());

    // Quota fits A then C exactly; B would overflow and must not be charged.
    Repository repo = fresh(static_cast<std::int64_t>(line_a.size() + line_c.size()));
    auto res = repo.ingest_bulk({line_a, line_b, line_c}, kMicrosPerSecond);
    CHECK(res.accepted == 2);
    CHECK(res.rejected_over_quota == 1);
    CHECK(repo.bytes_ingested_on(0) ==
          static_cast<std::int64_t>(line_a.size() + line_c.size()));

    // The day budget is exhausted; the next day starts fresh.
    CHECK(repo.ingest_bulk({line_c}, 2 * kMicrosPerSecond).rejected_over_quota == 1);
    CHECK(repo.ingest_bulk({ship_line("node1", 86400 + 5, flood_body("192.168.1.101"))},
                           kMicrosPerDay + kMicrosPerSecond)
              .accepted == 1);
}

TEST_CASE("retention hides and purges events older than the horizon") {
    Repository repo = fresh();
    repo.ingest_bulk({ship_line("node1", 100, flood_body("192.168.1.101"))},
                     100 * kMicrosPerSecond);
    repo.ingest_bulk({ship_line("node2", 9 * 86400, flood_body("192.168.1.102"))},
                     Micros{9} * kMicrosPerDay);
    CHECK(repo.events().size() == 2);
    // now = 9 days: the first event (t=100 s) is over 7 days old.
    CHECK(repo.visible_count() == 1);
    Query q = parse_query("count(*)");
    CHECK(repo.run_query(q).scalar == 1);

    CHECK(repo.apply_retention(repo.now()) == 1);
    CHECK(repo.events().size() == 1);
    CHECK(repo.events()[0].host == "node2");
}

TEST_CASE("query pipeline composes filters, windows, grouping, and counting") {
    Repository repo = fresh();
    repo.ingest_bulk(
        {
            ship_line("node1", 10, flood_body("192.168.1.101")),
            ship_line("node1", 20, flood_body("192.168.1.101")),
            ship_line("node2", 30, flood_body("192.168.1.102")),
            ship_line("node1", 40, scan_body("192.168.1.101", 80)),
            ship_line("central", 70, "mark", 1),
        },
        100 * kMicrosPerSecond);

    CHECK(repo.run_query(parse_query("count(*)")).scalar == 5);
    CHECK(repo.run_query(parse_query("count(sid)")).scalar == 4);  // "mark" has no alert fields
    CHECK(repo.run_query(parse_query("filter(sid=100001) | count(*)")).scalar == 3);
    CHECK(repo.run_query(parse_query("filter(sid=100001) | filter(host=node1) | count(*)")).scalar ==
          2);
    CHECK(repo.run_query(parse_query("filter(severity=alert) | count(*)")).scalar == 5);
    CHECK(repo.run_query(parse_query("filter(dst_ip=192.168.1.102) | count(*)")).scalar == 1);
    CHECK(repo.run_query(parse_query("window(0,60) | count(*)")).scalar == 4);
    CHECK(repo.run_query(parse_query("window(0,60) | filter(sid=10000005) | count(*)")).scalar == 1);

    auto grouped = repo.run_query(parse_query("filter(sid=100001) | groupby(host) | count(*)"));
    REQUIRE(grouped.groups.size() == 2);
    CHECK(grouped.groups[0] == std::pair<std::string, std::int64_t>{"node1", 2});
    CHECK(grouped.groups[1] == std::pair<std::string, std::int64_t>{"node2", 1});

    auto by_tag = repo.run_query(parse_query("groupby(syslogtag) | count(*)"));
    REQUIRE(by_tag.groups.size() == 2);
    CHECK(by_tag.groups[0].first == "snort[1]");
    CHECK(by_tag.groups[1] == std::pair<std::string, std::int64_t>{"snort[701]", 4});
}

TEST_CASE("queries reject unknown fields and bad syntax eagerly") {
    Repository repo = fresh();
    CHECK_THROWS_AS(parse_query("frobnicate(x)"), QueryError);
    CHECK_THROWS_AS(parse_query("filter(sid)"), QueryError);
    CHECK_THROWS_AS(parse_query("window(60)"), QueryError);
    CHECK_THROWS_AS(parse_query("filter(sid=1) |"), QueryError);
    CHECK_THROWS_AS(parse_query(""), QueryError);
    // Field names are validated even when no event would match.
    CHECK_THROWS_AS(repo.run_query(parse_query("filter(bogus=1) | count(*)")), QueryError);
    CHECK_THROWS_AS(repo.run_query(parse_query("groupby(bogus) | count(*)")), QueryError);
    CHECK_THROWS_AS(repo.run_query(parse_query("count(bogus)")), QueryError);
}

TEST_CASE("correlation needs min_nodes distinct hosts inside the window") {
    Repository repo = fresh();
    repo.ingest_bulk(
        {
            ship_line("node3", 10, flood_body("192.168.1.103")),
            ship_line("node5", 20, flood_body("192.168.1.105")),
            ship_line("node7", 30, flood_body("192.168.1.107")),
            ship_line("node9", 40, flood_body("192.168.1.109")),
            // Same attacker, different signature: separate correlation key.
            ship_line("node3", 12, scan_body("192.168.1.103", 22)),
            ship_line("node5", 13, scan_body("192.168.1.105", 22)),
        },
        100 * kMicrosPerSecond);

    auto metas = repo.correlate({60, 3});
    REQUIRE(metas.size() == 1);
    CHECK(metas[0].attacker_ip.str() == "192.168.1.66");
    CHECK(metas[0].sid == 100001);
    CHECK(metas[0].nodes == std::vector<std::string>{"node3", "node5", "node7", "node9"});
    CHECK(metas[0].window_start == 10 * kMicrosPerSecond);
    CHECK(metas[0].window_end == 40 * kMicrosPerSecond);
    CHECK(metas[0].event_count == 4);

    // The scan events span only two hosts.
    CHECK(repo.correlate({60, 2}).size() == 2);
    CHECK_THROWS_AS(repo.correlate({60, 1}), ConfigError);
}

TEST_CASE("correlation windows slide rather than bucket") {
    Repository repo = fresh();
    repo.ingest_bulk(
        {
            ship_line("node1", 0, flood_body("192.168.1.101")),
            ship_line("node2", 30, flood_body("192.168.1.102")),
            ship_line("node3", 61, flood_body("192.168.1.103")),
        },
        100 * kMicrosPerSecond);
    // 0 and 61 are more than 60 s apart, so no 3-host window exists...
    CHECK(repo.correlate({60, 3}).empty());
    // ...but 30 and 61 do fit a 2-host window.
    auto pairs = repo.correlate({60, 2});
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].nodes == std::vector<std::string>{"node1", "node2", "node3"});
    CHECK(pairs[0].event_count == 3);
}

TEST_CASE("correlation is invariant to ingest order") {
    std::vector<std::string> lines = {
        ship_line("node3", 10, flood_body("192.168.1.103")),
        ship_line("node5", 20, flood_body("192.168.1.105")),
        ship_line("node7", 30, flood_body("192.168.1.107")),
        ship_line("node1", 15, scan_body("192.168.1.101", 80)),
    };
    auto run_with = [&](const std::vector<std::string>& order) {
        Repository repo = fresh();
        repo.ingest_bulk(order, 100 * kMicrosPerSecond);
        return repo.correlate({60, 3});
    };
    auto metas = run_with(lines);
    std::vector<std::string> shuffled = {lines[2], lines[0], lines[3], lines[1]};
    auto metas2 = run_with(shuffled);
    REQUIRE(metas.size() == 1);
    REQUIRE(metas2.size() == 1);
    CHECK(metas[0].nodes == metas2[0].nodes);
    CHECK(metas[0].window_start == metas2[0].window_start);
    CHECK(metas[0].window_end == metas2[0].window_end);
    CHECK(metas[0].event_count == metas2[0].event_count);
}

TEST_CASE("repository save and load round-trip") {
    Repository repo = fresh();
    repo.ingest_bulk(
        {ship_line("node1", 10, flood_body("192.168.1.101")),
         ship_line("node2", 20, "mark")},
        50 * kMicrosPerSecond);
    const auto path =
        (std::filesystem::temp_directory_path() / "cids_siem_roundtrip.ndjson").string();
    repo.save(path);
    Repository back = Repository::load(path);
    CHECK(back.events().size() == 2);
    CHECK(back.accepted_total() == repo.accepted_total());
    CHECK(back.now() == repo.now());
    CHECK(back.quota_bytes() == repo.quota_bytes());
    CHECK(back.run_query(parse_query("filter(sid=100001) | count(*)")).scalar == 1);
    REQUIRE(back.events()[0].alert);
    CHECK(back.events()[0].alert->sid == 100001);
    std::remove(path.c_str());
}
