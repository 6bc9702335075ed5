#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cids/errors.hpp"
#include "cids/packet.hpp"
#include "cids/vtime.hpp"

namespace cids::siem {

// Alert body fields recovered from a stored message, when it matches the
// sensor alert grammar.
struct ParsedAlert {
    int gid = 1;
    int sid = 0;
    int rev = 0;
    std::string msg;
    std::optional<std::string> classtype;
    std::optional<int> priority;
    Proto proto = Proto::tcp;
    Ipv4 src_ip;
    std::uint16_t src_port = 0;
    Ipv4 dst_ip;
    std::uint16_t dst_port = 0;

    friend bool operator==(const ParsedAlert&, const ParsedAlert&) = default;
};

// Strict inverse of the sensor's alert formatting; nullopt when the text is
// anything else.
std::optional<ParsedAlert> parse_alert_body(const std::string& body);

struct SiemEvent {
    Micros ingest_ts = 0;
    Micros event_ts = 0;  // from @timestamp (whole-second resolution)
    std::string host;
    std::string severity;
    std::string facility;
    std::string syslogtag;
    std::string name;
    std::optional<int> pid;
    std::string raw_message;
    std::optional<ParsedAlert> alert;
};

struct IngestResult {
    std::int64_t accepted = 0;
    std::int64_t rejected_over_quota = 0;
    std::int64_t malformed = 0;
};

struct CorrelationParams {
    std::int64_t window_s = 60;
    int min_nodes = 3;
};

// One attacker hitting several nodes with the same signature inside a window.
struct MetaAlert {
    Ipv4 attacker_ip;
    int sid = 0;
    std::vector<std::string> nodes;  // sorted, distinct
    Micros window_start = 0;
    Micros window_end = 0;
    std::int64_t event_count = 0;
};

// Composable query: conjunctive field filters, optional event-time window
// [from, to), then either a grouped count or a plain count.
struct Query {
    struct Filter {
        std::string field;
        std::string value;
    };
    std::vector<Filter> filters;
    std::optional<std::pair<Micros, Micros>> window;
    std::optional<std::string> group_by;
    std::optional<std::string> count_field;  // "*" counts every event
};

// Pipeline syntax: `filter(sid=100001) | window(0,60) | groupby(host) | count(*)`
// Stage names: filter, window, groupby (or group_by), count.
Query parse_query(const std::string& text);

struct QueryResult {
    std::optional<std::int64_t> scalar;                      // count without grouping
    std::vector<std::pair<std::string, std::int64_t>> groups;  // sorted by key
};

// LogScale-like event repository: bulk NDJSON ingestion under a daily byte
// quota, 7-day retention, queries, and cross-node correlation.
class Repository {
public:
    Repository(std::int64_t daily_quota_bytes, int retention_days)
        : quota_(daily_quota_bytes), retention_days_(retention_days) {}

    // Lines must be ExportRecord-shaped JSON. A line is accepted iff its byte
    // length still fits the ingest day's remaining budget; rejected lines are
    // not charged, so a later shorter line may still fit. Malformed lines are
    // counted and skipped without charge.
    IngestResult ingest_bulk(const std::vector<std::string>& lines, Micros ingest_ts);

    void seek(Micros now);
    Micros now() const { return now_; }

    // Drops events with event_ts <= now - retention from storage; queries and
    // correlation never see them either way.
    std::int64_t apply_retention(Micros now);

    QueryResult run_query(const Query& q) const;
    std::vector<MetaAlert> correlate(const CorrelationParams& params) const;

    const std::vector<SiemEvent>& events() const { return events_; }
    std::int64_t visible_count() const;
    std::int64_t accepted_total() const { return accepted_total_; }
    std::int64_t rejected_total() const { return rejected_total_; }
    std::int64_t malformed_total() const { return malformed_total_; }
    std::int64_t quota_bytes() const { return quota_; }
    int retention_days() const { return retention_days_; }
    std::int64_t bytes_ingested_on(std::int64_t day) const;

    void save(const std::string& path) const;
    static Repository load(const std::string& path);

private:
    bool visible(const SiemEvent& e) const;

    std::int64_t quota_;
    int retention_days_;
    Micros now_ = 0;
    std::vector<SiemEvent> events_;
    std::map<std::int64_t, std::int64_t> bytes_by_day_;
    std::int64_t accepted_total_ = 0;
    std::int64_t rejected_total_ = 0;
    std::int64_t malformed_total_ = 0;
};

}  // namespace cids::siem
