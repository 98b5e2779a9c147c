#include "fintwit/datetime.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>

#include "fintwit/common.hpp"

namespace fintwit {

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

// Howard Hinnant's civil-days algorithms.
std::int64_t days_from_civil(const Date& d) {
    const int y = d.year - (d.month <= 2);
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (d.month + (d.month > 2 ? -3 : 9)) + 2) / 5 + d.day - 1;
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
    const unsigned day = doy - (153 * mp + 2) / 5 + 1;
    const unsigned month = mp + (mp < 10 ? 3 : -9);
    return Date{static_cast<int>(y + (month <= 2)), static_cast<int>(month), static_cast<int>(day)};
}

int weekday(const Date& d) {
    const std::int64_t z = days_from_civil(d);
    return static_cast<int>(z >= -4 ? (z + 4) % 7 : (z + 5) % 7 + 6);
}

bool is_weekend(const Date& d) {
    const int w = weekday(d);
    return w == 0 || w == 6;
}

Date add_days(const Date& d, int n) { return civil_from_days(days_from_civil(d) + n); }

std::optional<Date> parse_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    for (int i : {0, 1, 2, 3, 5, 6, 8, 9}) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
    }
    Date d;
    d.year = std::atoi(s.substr(0, 4).c_str());
    d.month = std::atoi(s.substr(5, 2).c_str());
    d.day = std::atoi(s.substr(8, 2).c_str());
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31) return std::nullopt;
    if (civil_from_days(days_from_civil(d)) != d) return std::nullopt;  // e.g. Feb 30
    return d;
}

EpochSeconds civil_to_epoch_utc(const CivilTime& c) {
    return days_from_civil(c.date) * 86400 + c.hour * 3600 + c.minute * 60 + c.second;
}

CivilTime epoch_to_civil_utc(EpochSeconds t) {
    std::int64_t days = t / 86400;
    std::int64_t rem = t % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    CivilTime c;
    c.date = civil_from_days(days);
    c.hour = static_cast<int>(rem / 3600);
    c.minute = static_cast<int>((rem % 3600) / 60);
    c.second = static_cast<int>(rem % 60);
    return c;
}

namespace {

Date nth_weekday_of_month(int year, int month, int wd, int nth) {
    Date first{year, month, 1};
    int w = weekday(first);
    int delta = (wd - w + 7) % 7 + (nth - 1) * 7;
    return add_days(first, delta);
}

// US DST boundaries in UTC (post-2007 rule): starts second Sunday of March
// 02:00 EST (07:00 UTC), ends first Sunday of November 02:00 EDT (06:00 UTC).
bool us_eastern_is_dst(EpochSeconds utc) {
    const Date d = epoch_to_civil_utc(utc).date;
    const Date start = nth_weekday_of_month(d.year, 3, 0, 2);
    const Date end = nth_weekday_of_month(d.year, 11, 0, 1);
    const EpochSeconds start_utc = days_from_civil(start) * 86400 + 7 * 3600;
    const EpochSeconds end_utc = days_from_civil(end) * 86400 + 6 * 3600;
    return utc >= start_utc && utc < end_utc;
}

}  // namespace

Timezone Timezone::parse(const std::string& name) {
    if (name == "US/Eastern" || name == "America/New_York") return us_eastern();
    if (name.empty() || name == "UTC" || name == "Z") return utc();
    if (name.rfind("UTC", 0) == 0 && name.size() >= 6 && (name[3] == '+' || name[3] == '-')) {
        const int sign = name[3] == '-' ? -1 : 1;
        const std::string rest = name.substr(4);
        int hh = 0, mm = 0;
        if (std::sscanf(rest.c_str(), "%d:%d", &hh, &mm) >= 1) {
            return Timezone(Kind::Fixed, sign * (hh * 3600 + mm * 60), name);
        }
    }
    throw FatalError("unrecognized timezone: " + name);
}

int Timezone::offset_seconds_at(EpochSeconds utc) const {
    if (kind_ == Kind::Fixed) return fixed_offset_;
    return us_eastern_is_dst(utc) ? -4 * 3600 : -5 * 3600;
}

CivilTime Timezone::to_local(EpochSeconds utc) const {
    return epoch_to_civil_utc(utc + offset_seconds_at(utc));
}

EpochSeconds Timezone::to_utc(const CivilTime& local) const {
    if (kind_ == Kind::Fixed) return civil_to_epoch_utc(local) - fixed_offset_;
    // Guess standard time, then accept the DST interpretation when consistent.
    const EpochSeconds as_est = civil_to_epoch_utc(local) + 5 * 3600;
    const EpochSeconds as_edt = civil_to_epoch_utc(local) + 4 * 3600;
    if (us_eastern_is_dst(as_edt)) return as_edt;
    return as_est;
}

std::optional<EpochSeconds> parse_timestamp(const std::string& s) {
    if (s.size() < 16) return std::nullopt;
    auto date = parse_date(s.substr(0, 10));
    if (!date) return std::nullopt;
    if (s[10] != 'T' && s[10] != ' ') return std::nullopt;

    int hour = 0, minute = 0, second = 0;
    if (!std::isdigit(static_cast<unsigned char>(s[11])) ||
        !std::isdigit(static_cast<unsigned char>(s[12])) || s[13] != ':' ||
        !std::isdigit(static_cast<unsigned char>(s[14])) ||
        !std::isdigit(static_cast<unsigned char>(s[15]))) {
        return std::nullopt;
    }
    hour = (s[11] - '0') * 10 + (s[12] - '0');
    minute = (s[14] - '0') * 10 + (s[15] - '0');
    std::size_t pos = 16;
    if (pos < s.size() && s[pos] == ':') {
        if (pos + 2 >= s.size() || !std::isdigit(static_cast<unsigned char>(s[pos + 1])) ||
            !std::isdigit(static_cast<unsigned char>(s[pos + 2]))) {
            return std::nullopt;
        }
        second = (s[pos + 1] - '0') * 10 + (s[pos + 2] - '0');
        pos += 3;
    }
    if (hour > 23 || minute > 59 || second > 60) return std::nullopt;

    int tz_offset = 0;  // seconds east of UTC
    if (pos < s.size()) {
        const char c = s[pos];
        if (c == 'Z') {
            if (pos + 1 != s.size()) return std::nullopt;
        } else if (c == '+' || c == '-') {
            const int sign = c == '-' ? -1 : 1;
            std::string rest = s.substr(pos + 1);
            int hh = 0, mm = 0;
            if (std::sscanf(rest.c_str(), "%2d:%2d", &hh, &mm) == 2 ||
                std::sscanf(rest.c_str(), "%2d%2d", &hh, &mm) == 2 ||
                std::sscanf(rest.c_str(), "%2d", &hh) == 1) {
                tz_offset = sign * (hh * 3600 + mm * 60);
            } else {
                return std::nullopt;
            }
        } else {
            return std::nullopt;
        }
    }

    CivilTime c{*date, hour, minute, second};
    return civil_to_epoch_utc(c) - tz_offset;
}

std::string format_timestamp_utc(EpochSeconds t) {
    const CivilTime c = epoch_to_civil_utc(t);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", c.date.year, c.date.month,
                  c.date.day, c.hour, c.minute, c.second);
    return buf;
}

}  // namespace fintwit
