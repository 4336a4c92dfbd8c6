#pragma once

#include <cstdint>
#include <string>

namespace dartkit {

// Calendar date (no time-of-day). Used for split boundaries and holidays.
struct Date {
    int year = 0;
    int month = 0;  // 1..12
    int day = 0;    // 1..31

    auto operator<=>(const Date&) const = default;
};

// Days since 1970-01-01 for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(const Date& d);
Date civil_from_days(std::int64_t days);

// 0 = Sunday .. 6 = Saturday.
int weekday_from_days(std::int64_t days);

// Parse "YYYY-MM-DD".
Date parse_date(const std::string& s);
std::string format_date(const Date& d);

// One market-local instant. Timestamps are stored as UTC epoch seconds
// plus the numeric UTC offset they were written with, so duplicated
// fall-back hours remain distinct while calendar logic uses wall-clock
// fields. Comparisons and uniqueness use the UTC instant.
struct Timestamp {
    std::int64_t epoch_sec = 0;  // seconds since 1970-01-01T00:00:00Z
    int offset_min = 0;          // local = UTC + offset

    std::int64_t local_sec() const { return epoch_sec + 60LL * offset_min; }
    std::int64_t local_day() const;   // local civil day number
    Date local_date() const;
    int local_hour() const;           // 0..23, hour-beginning
    int local_month() const;          // 1..12
    int local_year() const;
    int local_weekday() const;        // 0 = Sunday

    auto operator<=>(const Timestamp& o) const { return epoch_sec <=> o.epoch_sec; }
    bool operator==(const Timestamp& o) const { return epoch_sec == o.epoch_sec; }
};

// Parse ISO-8601 with a numeric UTC offset, e.g. "2023-06-01T14:00:00-05:00".
// "Z", "+HH:MM" and "+HHMM" offsets are accepted.
Timestamp parse_timestamp(const std::string& s);
std::string format_timestamp(const Timestamp& t);

}  // namespace dartkit
