#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "cids/errors.hpp"

namespace cids {

// Virtual time is fixed-point microseconds since the start of the run.
using Micros = std::int64_t;

constexpr Micros kMicrosPerSecond = 1'000'000;
constexpr Micros kMicrosPerDay = Micros{86'400} * kMicrosPerSecond;

inline Micros micros_from_seconds(double s) {
    return static_cast<Micros>(std::llround(s * 1e6));
}

inline double seconds_from_micros(Micros us) {
    return static_cast<double>(us) / 1e6;
}

// Monotone simulation clock. Advances only by explicit stepping.
class VirtualClock {
public:
    Micros now() const { return now_; }

    void advance(Micros dt) {
        if (dt <= 0) throw std::invalid_argument("VirtualClock::advance: dt must be > 0");
        now_ += dt;
    }

    // Used by the event loop when dispatching a due event.
    void seek(Micros t) {
        if (t < now_) throw InvariantError("VirtualClock::seek: time cannot go backwards");
        now_ = t;
    }

private:
    Micros now_ = 0;
};

// Calendar rendering of virtual time. t=0 maps to Jan 01 00:00:00 of a fixed
// non-leap year (2025 when a year is needed, e.g. RFC3339 exports); times wrap
// every 365 days.
struct CalendarTime {
    int month = 1;  // 1..12
    int day = 1;    // 1..31
    int hour = 0;
    int minute = 0;
    int second = 0;
};

CalendarTime calendar_from_seconds(std::int64_t seconds);
std::int64_t seconds_from_calendar(const CalendarTime& ct);

// "Mmm dd hh:mm:ss" with zero-padded day, e.g. "Jan 02 03:04:05".
std::string format_syslog_time(std::int64_t seconds);
std::optional<std::int64_t> parse_syslog_time(const std::string& text);

// "2025-01-02T03:04:05+00:00".
std::string format_rfc3339(std::int64_t seconds);
std::optional<std::int64_t> parse_rfc3339(const std::string& text);

}  // namespace cids
