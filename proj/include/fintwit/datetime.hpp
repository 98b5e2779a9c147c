#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace fintwit {

// Calendar date. Comparisons are by day number.
struct Date {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..31

    auto operator<=>(const Date&) const = default;

    std::string to_string() const;  // YYYY-MM-DD
};

// Days since 1970-01-01 (proleptic Gregorian).
std::int64_t days_from_civil(const Date& d);
Date civil_from_days(std::int64_t z);

// 0 = Sunday ... 6 = Saturday.
int weekday(const Date& d);
bool is_weekend(const Date& d);
Date add_days(const Date& d, int n);

std::optional<Date> parse_date(const std::string& s);  // strict YYYY-MM-DD

// Wall-clock fields of a local datetime.
struct CivilTime {
    Date date;
    int hour = 0;
    int minute = 0;
    int second = 0;
};

// Exchange timezone. "US/Eastern" applies the post-2007 US DST rule;
// "UTC" and fixed offsets ("UTC+05:30", "UTC-04:00") are also accepted.
class Timezone {
public:
    static Timezone parse(const std::string& name);
    static Timezone utc() { return Timezone(Kind::Fixed, 0, "UTC"); }
    static Timezone us_eastern() { return Timezone(Kind::UsEastern, 0, "US/Eastern"); }

    CivilTime to_local(std::int64_t epoch_utc) const;
    std::int64_t to_utc(const CivilTime& local) const;  // ambiguous hours resolve to standard time
    int offset_seconds_at(std::int64_t epoch_utc) const;

    const std::string& name() const { return name_; }

private:
    enum class Kind { Fixed, UsEastern };
    Timezone(Kind kind, int offset, std::string name)
        : kind_(kind), fixed_offset_(offset), name_(std::move(name)) {}

    Kind kind_;
    int fixed_offset_;  // seconds east of UTC, Kind::Fixed only
    std::string name_;
};

// Seconds since the Unix epoch, UTC.
using EpochSeconds = std::int64_t;

EpochSeconds civil_to_epoch_utc(const CivilTime& utc);
CivilTime epoch_to_civil_utc(EpochSeconds t);

// ISO-8601: YYYY-MM-DD[T ]HH:MM[:SS][Z|+hh:mm|-hhmm]. Missing zone means UTC.
std::optional<EpochSeconds> parse_timestamp(const std::string& s);
std::string format_timestamp_utc(EpochSeconds t);  // YYYY-MM-DDTHH:MM:SSZ

}  // namespace fintwit
