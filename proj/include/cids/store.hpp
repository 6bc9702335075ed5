#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cids/syslog.hpp"
#include "cids/vtime.hpp"

namespace cids::store {

// One persisted log row, mirroring the readable SystemEvents columns.
struct SystemEventRow {
    std::int64_t id = 0;          // auto-increment, from 1
    Micros received_at = 0;       // central receive time, microseconds
    std::int64_t device_time_s = 0;  // timestamp carried in the message
    int facility = 0;
    int priority = 0;  // syslog severity
    std::string from_host;
    std::string syslog_tag;  // e.g. "snort[701]"
    std::string message;

    friend bool operator==(const SystemEventRow&, const SystemEventRow&) = default;
};

// Lowercase text names used by the NDJSON export ("alert", "local7", ...).
const char* severity_name(int severity);
const char* facility_name(int facility);
std::optional<int> severity_from_name(const std::string& s);
std::optional<int> facility_from_name(const std::string& s);

// Splits "snort[701]" into ("snort", 701); pid empty when no bracket suffix.
std::pair<std::string, std::optional<int>> split_tag(const std::string& syslog_tag);

// Append-only central event table with NDJSON persistence and an SQL dump for
// interop. Single writer; reads any time.
class EventStore {
public:
    std::int64_t insert(const syslog::SyslogMessage& m, Micros received_at);

    const std::vector<SystemEventRow>& rows() const { return rows_; }
    std::int64_t row_count() const { return static_cast<std::int64_t>(rows_.size()); }

    // Rows matching the predicate (and the half-open received_at window
    // [from, to) when given), ordered by id.
    std::vector<const SystemEventRow*> query_rows(
        const std::function<bool(const SystemEventRow&)>& pred,
        std::optional<Micros> received_from = std::nullopt,
        std::optional<Micros> received_to = std::nullopt) const;

    // One export line per row: @timestamp, message, host, severity, facility,
    // syslogtag, name, pid — exactly these keys, in this order.
    static std::string export_line(const SystemEventRow& row);
    std::vector<std::string> export_ndjson() const;

    void save(const std::string& path) const;
    static EventStore load(const std::string& path);

    std::string dump_sql() const;

private:
    std::vector<SystemEventRow> rows_;
};

// Slices lines into ship batches of at most batch_size (final batch may be
// short). batch_size < 1 is a config error.
std::vector<std::vector<std::string>> make_batches(const std::vector<std::string>& lines,
                                                   std::size_t batch_size);

}  // namespace cids::store
