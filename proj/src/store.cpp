#include "cids/store.hpp"

#include <array>
#include <fstream>

#include <nlohmann/json.hpp>

#include "cids/errors.hpp"

namespace cids::store {
namespace {

constexpr std::array<const char*, 8> kSeverityNames = {
    "emerg", "alert", "crit", "err", "warning", "notice", "info", "debug"};

constexpr std::array<const char*, 24> kFacilityNames = {
    "kern",   "user",   "mail",   "daemon", "auth",   "syslog", "lpr",    "news",
    "uucp",   "cron",   "authpriv", "ftp",  "ntp",    "audit",  "alert",  "clock",
    "local0", "local1", "local2", "local3", "local4", "local5", "local6", "local7"};

std::string sql_datetime_us(Micros us) {
    CalendarTime ct = calendar_from_seconds(us / kMicrosPerSecond);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "2025-%02d-%02d %02d:%02d:%02d.%06d", ct.month, ct.day,
                  ct.hour, ct.minute, ct.second, static_cast<int>(us % kMicrosPerSecond));
    return buf;
}

std::string sql_datetime_s(std::int64_t s) {
    CalendarTime ct = calendar_from_seconds(s);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "2025-%02d-%02d %02d:%02d:%02d", ct.month, ct.day, ct.hour,
                  ct.minute, ct.second);
    return buf;
}

std::string sql_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "''";
        else if (c == '\\') out += "\\\\";
        else out.push_back(c);
    }
    out += "'";
    return out;
}

}  // namespace

const char* severity_name(int severity) {
    if (severity < 0 || severity > 7) throw CodecError("severity out of range");
    return kSeverityNames[severity];
}

const char* facility_name(int facility) {
    if (facility < 0 || facility > 23) throw CodecError("facility out of range");
    return kFacilityNames[facility];
}

std::optional<int> severity_from_name(const std::string& s) {
    for (int i = 0; i < 8; ++i)
        if (s == kSeverityNames[i]) return i;
    return std::nullopt;
}

std::optional<int> facility_from_name(const std::string& s) {
    for (int i = 0; i < 24; ++i)
        if (s == kFacilityNames[i]) return i;
    return std::nullopt;
}

std::pair<std::string, std::optional<int>> split_tag(const std::string& syslog_tag) {
    if (!syslog_tag.empty() && syslog_tag.back() == ']') {
        auto open = syslog_tag.find('[');
        if (open != std::string::npos && open > 0) {
            std::string digits = syslog_tag.substr(open + 1, syslog_tag.size() - open - 2);
            if (!digits.empty() &&
                digits.find_first_not_of("0123456789") == std::string::npos)
                return {syslog_tag.substr(0, open), std::stoi(digits)};
        }
    }
    return {syslog_tag, std::nullopt};
}

std::int64_t EventStore::insert(const syslog::SyslogMessage& m, Micros received_at) {
    SystemEventRow row;
    row.id = static_cast<std::int64_t>(rows_.size()) + 1;
    row.received_at = received_at;
    row.device_time_s = m.timestamp_s;
    row.facility = m.facility;
    row.priority = m.severity;
    row.from_host = m.hostname;
    row.syslog_tag = m.tag + (m.pid ? "[" + std::to_string(*m.pid) + "]" : "");
    row.message = m.body;
    rows_.push_back(std::move(row));
    return rows_.back().id;
}

std::vector<const SystemEventRow*> EventStore::query_rows(
    const std::function<bool(const SystemEventRow&)>& pred, std::optional<Micros> received_from,
    std::optional<Micros> received_to) const {
    std::vector<const SystemEventRow*> out;
    for (const auto& row : rows_) {
        if (received_from && row.received_at < *received_from) continue;
        if (received_to && row.received_at >= *received_to) continue;
        if (pred && !pred(row)) continue;
        out.push_back(&row);
    }
    return out;
}

std::string EventStore::export_line(const SystemEventRow& row) {
    auto [name, pid] = split_tag(row.syslog_tag);
    nlohmann::ordered_json j;
    j["@timestamp"] = format_rfc3339(row.device_time_s);
    j["message"] = row.message;
    j["host"] = row.from_host;
    j["severity"] = severity_name(row.priority);
    j["facility"] = facility_name(row.facility);
    j["syslogtag"] = row.syslog_tag;
    j["name"] = name;
    if (pid) j["pid"] = *pid;
    else j["pid"] = nullptr;
    return j.dump();
}

std::vector<std::string> EventStore::export_ndjson() const {
    std::vector<std::string> lines;
    lines.reserve(rows_.size());
    for (const auto& row : rows_) lines.push_back(export_line(row));
    return lines;
}

void EventStore::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write store file: " + path);
    nlohmann::ordered_json header;
    header["schema_version"] = 1;
    header["kind"] = "store";
    header["rows"] = rows_.size();
    out << header.dump() << "\n";
    for (const auto& row : rows_) {
        nlohmann::ordered_json j;
        j["id"] = row.id;
        j["received_at_us"] = row.received_at;
        j["device_time_s"] = row.device_time_s;
        j["facility"] = row.facility;
        j["priority"] = row.priority;
        j["from_host"] = row.from_host;
        j["syslog_tag"] = row.syslog_tag;
        j["message"] = row.message;
        out << j.dump() << "\n";
    }
}

EventStore EventStore::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open store file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw CodecError("store file empty: " + path);
    nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
    if (header.is_discarded() || header.value("kind", "") != "store" ||
        header.value("schema_version", 0) != 1)
        throw CodecError("store file header invalid: " + path);

    EventStore store;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw CodecError("store file row invalid: " + path);
        SystemEventRow row;
        row.id = j.at("id").get<std::int64_t>();
        row.received_at = j.at("received_at_us").get<Micros>();
        row.device_time_s = j.at("device_time_s").get<std::int64_t>();
        row.facility = j.at("facility").get<int>();
        row.priority = j.at("priority").get<int>();
        row.from_host = j.at("from_host").get<std::string>();
        row.syslog_tag = j.at("syslog_tag").get<std::string>();
        row.message = j.at("message").get<std::string>();
        if (row.id != static_cast<std::int64_t>(store.rows_.size()) + 1)
            throw InvariantError("store file ids not sequential: " + path);
        store.rows_.push_back(std::move(row));
    }
    return store;
}

std::string EventStore::dump_sql() const {
    std::string out;
    out += "CREATE TABLE IF NOT EXISTS SystemEvents (\n";
    out += "  ID INT UNSIGNED NOT NULL AUTO_INCREMENT,\n";
    out += "  ReceivedAt DATETIME(6) NULL,\n";
    out += "  DeviceReportedTime DATETIME NULL,\n";
    out += "  Facility SMALLINT NULL,\n";
    out += "  Priority SMALLINT NULL,\n";
    out += "  FromHost VARCHAR(60) NULL,\n";
    out += "  SysLogTag VARCHAR(60) NULL,\n";
    out += "  Message LONGTEXT NULL,\n";
    out += "  PRIMARY KEY (ID)\n";
    out += ");\n";
    for (const auto& row : rows_) {
        out += "INSERT INTO SystemEvents (ID, ReceivedAt, DeviceReportedTime, Facility, "
               "Priority, FromHost, SysLogTag, Message) VALUES (";
        out += std::to_string(row.id) + ", ";
        out += "'" + sql_datetime_us(row.received_at) + "', ";
        out += "'" + sql_datetime_s(row.device_time_s) + "', ";
        out += std::to_string(row.facility) + ", ";
        out += std::to_string(row.priority) + ", ";
        out += sql_quote(row.from_host) + ", ";
        out += sql_quote(row.syslog_tag) + ", ";
        out += sql_quote(row.message) + ");\n";
    }
    return out;
}

std::vector<std::vector<std::string>> make_batches(const std::vector<std::string>& lines,
                                                   std::size_t batch_size) {
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    std::vector<std::vector<std::string>> out;
    for (std::size_t i = 0; i < lines.size(); i += batch_size) {
        auto end = std::min(lines.size(), i + batch_size);
        out.emplace_back(lines.begin() + static_cast<std::ptrdiff_t>(i),
                         lines.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

}  // namespace cids::store
