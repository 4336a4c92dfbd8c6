#include "dartkit/timeutil.hpp"

#include <cstdio>
#include <cstdlib>

#include "dartkit/errors.hpp"

namespace dartkit {

// Howard Hinnant's civil-date algorithms.
std::int64_t days_from_civil(const Date& d) {
    int y = d.year;
    const int m = d.month;
    const unsigned dd = static_cast<unsigned>(d.day);
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 + dd - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

Date civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

int weekday_from_days(std::int64_t z) {
    return static_cast<int>(z >= -4 ? (z + 4) % 7 : (z + 5) % 7 + 6);
}

Date parse_date(const std::string& s) {
    int y = 0, m = 0, d = 0;
    if (std::sscanf(s.c_str(), "%d-%d-%d", &y, &m, &d) != 3 || m < 1 || m > 12 || d < 1 || d > 31)
        throw MalformedFile("bad date '" + s + "'");
    return Date{y, m, d};
}

std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

std::int64_t Timestamp::local_day() const {
    const std::int64_t ls = local_sec();
    return ls >= 0 ? ls / 86400 : (ls - 86399) / 86400;
}

Date Timestamp::local_date() const { return civil_from_days(local_day()); }

int Timestamp::local_hour() const {
    std::int64_t sod = local_sec() - local_day() * 86400;
    return static_cast<int>(sod / 3600);
}

int Timestamp::local_month() const { return local_date().month; }
int Timestamp::local_year() const { return local_date().year; }
int Timestamp::local_weekday() const { return weekday_from_days(local_day()); }

Timestamp parse_timestamp(const std::string& s) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    int n = 0;
    if (std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d%n", &y, &mo, &d, &h, &mi, &sec, &n) != 6)
        throw MalformedFile("bad timestamp '" + s + "'");
    const char* rest = s.c_str() + n;
    int off = 0;
    if (*rest == 'Z' || *rest == 'z') {
        off = 0;
    } else if (*rest == '+' || *rest == '-') {
        const int sign = (*rest == '-') ? -1 : 1;
        int oh = 0, om = 0;
        if (std::sscanf(rest + 1, "%d:%d", &oh, &om) == 2) {
            // "+HH:MM"
        } else {
            int hhmm = std::atoi(rest + 1);
            oh = hhmm / 100;
            om = hhmm % 100;
        }
        off = sign * (oh * 60 + om);
    } else {
        throw MalformedFile("timestamp '" + s + "' lacks a UTC offset");
    }
    const std::int64_t local =
        days_from_civil(Date{y, mo, d}) * 86400LL + h * 3600LL + mi * 60LL + sec;
    return Timestamp{local - 60LL * off, off};
}

std::string format_timestamp(const Timestamp& t) {
    const std::int64_t ls = t.local_sec();
    const std::int64_t day = t.local_day();
    const Date d = civil_from_days(day);
    std::int64_t sod = ls - day * 86400;
    const int h = static_cast<int>(sod / 3600);
    const int mi = static_cast<int>((sod % 3600) / 60);
    const int sec = static_cast<int>(sod % 60);
    const int off = t.offset_min;
    const char sign = off < 0 ? '-' : '+';
    const int ao = off < 0 ? -off : off;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d%c%02d:%02d", d.year, d.month,
                  d.day, h, mi, sec, sign, ao / 60, ao % 60);
    return buf;
}

}  // namespace dartkit
