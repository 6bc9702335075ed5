#include "cids/vtime.hpp"

#include <array>
#include <cstdio>
#include <cstring>

namespace cids {
namespace {

constexpr std::array<int, 12> kMonthDays = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
constexpr std::array<const char*, 12> kMonthNames = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                     "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
constexpr std::int64_t kSecondsPerYear = 365LL * 86400;

int month_index(const char* name) {
    for (int i = 0; i < 12; ++i) {
        if (std::strncmp(name, kMonthNames[i], 3) == 0) return i;
    }
    return -1;
}

}  // namespace

CalendarTime calendar_from_seconds(std::int64_t seconds) {
    std::int64_t s = seconds % kSecondsPerYear;
    if (s < 0) s += kSecondsPerYear;
    int day_of_year = static_cast<int>(s / 86400);
    int rem = static_cast<int>(s % 86400);
    CalendarTime ct;
    int m = 0;
    while (day_of_year >= kMonthDays[m]) {
        day_of_year -= kMonthDays[m];
        ++m;
    }
    ct.month = m + 1;
    ct.day = day_of_year + 1;
    ct.hour = rem / 3600;
    ct.minute = (rem / 60) % 60;
    ct.second = rem % 60;
    return ct;
}

std::int64_t seconds_from_calendar(const CalendarTime& ct) {
    std::int64_t days = 0;
    for (int m = 0; m < ct.month - 1; ++m) days += kMonthDays[m];
    days += ct.day - 1;
    return days * 86400 + ct.hour * 3600 + ct.minute * 60 + ct.second;
}

std::string format_syslog_time(std::int64_t seconds) {
    CalendarTime ct = calendar_from_seconds(seconds);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s %02d %02d:%02d:%02d", kMonthNames[ct.month - 1], ct.day,
                  ct.hour, ct.minute, ct.second);
    return buf;
}

std::optional<std::int64_t> parse_syslog_time(const std::string& text) {
    // Mmm dd hh:mm:ss, fixed width 15.
    if (text.size() != 15) return std::nullopt;
    int m = month_index(text.c_str());
    if (m < 0 || text[3] != ' ') return std::nullopt;
    CalendarTime ct;
    ct.month = m + 1;
    auto two = [&](int pos) -> int {
        char a = text[pos], b = text[pos + 1];
        if (a < '0' || a > '9' || b < '0' || b > '9') return -1;
        return (a - '0') * 10 + (b - '0');
    };
    ct.day = two(4);
    if (text[6] != ' ' || text[9] != ':' || text[12] != ':') return std::nullopt;
    ct.hour = two(7);
    ct.minute = two(10);
    ct.second = two(13);
    if (ct.day < 1 || ct.day > kMonthDays[m] || ct.hour < 0 || ct.hour > 23 || ct.minute < 0 ||
        ct.minute > 59 || ct.second < 0 || ct.second > 59)
        return std::nullopt;
    return seconds_from_calendar(ct);
}

std::string format_rfc3339(std::int64_t seconds) {
    CalendarTime ct = calendar_from_seconds(seconds);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "2025-%02d-%02dT%02d:%02d:%02d+00:00", ct.month, ct.day,
                  ct.hour, ct.minute, ct.second);
    return buf;
}

std::optional<std::int64_t> parse_rfc3339(const std::string& text) {
    int year, mon, day, hh, mm, ss;
    char tz[8] = {0};
    if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%6s", &year, &mon, &day, &hh, &mm, &ss,
                    tz) < 6)
        return std::nullopt;
    if (mon < 1 || mon > 12 || day < 1 || day > kMonthDays[mon - 1]) return std::nullopt;
    if (hh > 23 || mm > 59 || ss > 59 || hh < 0 || mm < 0 || ss < 0) return std::nullopt;
    CalendarTime ct{mon, day, hh, mm, ss};
    // Years other than the render base shift by whole 365-day years.
    return seconds_from_calendar(ct) + static_cast<std::int64_t>(year - 2025) * kSecondsPerYear;
}

}  // namespace cids
