#include <doctest.h>

#include "fintwit/datetime.hpp"

using namespace fintwit;

TEST_CASE("civil day round trip") {
    for (int y : {1970, 2000, 2018, 2019, 2020}) {
        for (int m = 1; m <= 12; ++m) {
            const Date d{y, m, 15};
            CHECK(civil_from_days(days_from_civil(d)) == d);
        }
    }
    CHECK(days_from_civil(Date{1970, 1, 1}) == 0);
    CHECK(days_from_civil(Date{1970, 1, 2}) == 1);
}

TEST_CASE("weekday and weekend") {
    CHECK(weekday(Date{2018, 6, 1}) == 5);  // Friday
    CHECK(weekday(Date{2018, 6, 3}) == 0);  // Sunday
    CHECK(is_weekend(Date{2018, 6, 2}));
    CHECK(is_weekend(Date{2018, 6, 3}));
    CHECK_FALSE(is_weekend(Date{2018, 6, 4}));
}

TEST_CASE("date parsing") {
    CHECK(parse_date("2018-06-01") == Date{2018, 6, 1});
    CHECK_FALSE(parse_date("2018-6-1").has_value());
    CHECK_FALSE(parse_date("2018-02-30").has_value());
    CHECK_FALSE(parse_date("20180601").has_value());
}

TEST_CASE("timestamp parsing variants") {
    const auto t1 = parse_timestamp("2018-06-01T12:34:56Z");
    REQUIRE(t1.has_value());
    CHECK(format_timestamp_utc(*t1) == "2018-06-01T12:34:56Z");

    const auto t2 = parse_timestamp("2018-06-01 12:34:56");
    CHECK(t2 == t1);

    const auto t3 = parse_timestamp("2018-06-01T08:34:56-04:00");
    CHECK(t3 == t1);

    const auto t4 = parse_timestamp("2018-06-01T12:34");
    REQUIRE(t4.has_value());
    CHECK(*t4 == *t1 - 56);

    CHECK_FALSE(parse_timestamp("not a time").has_value());
    CHECK_FALSE(parse_timestamp("2018-06-01T25:00:00Z").has_value());
}

TEST_CASE("US/Eastern offsets across DST") {
    const Timezone tz = Timezone::us_eastern();
    // Winter: EST, UTC-5.
    const auto jan = parse_timestamp("2019-01-15T12:00:00Z");
    CHECK(tz.offset_seconds_at(*jan) == -5 * 3600);
    CHECK(tz.to_local(*jan).hour == 7);
    // Summer: EDT, UTC-4.
    const auto jul = parse_timestamp("2019-07-15T12:00:00Z");
    CHECK(tz.offset_seconds_at(*jul) == -4 * 3600);
    CHECK(tz.to_local(*jul).hour == 8);
    // 2019 transitions: March 10 and November 3.
    CHECK(tz.offset_seconds_at(*parse_timestamp("2019-03-10T06:59:00Z")) == -5 * 3600);
    CHECK(tz.offset_seconds_at(*parse_timestamp("2019-03-10T07:01:00Z")) == -4 * 3600);
    CHECK(tz.offset_seconds_at(*parse_timestamp("2019-11-03T05:59:00Z")) == -4 * 3600);
    CHECK(tz.offset_seconds_at(*parse_timestamp("2019-11-03T06:01:00Z")) == -5 * 3600);
}

TEST_CASE("local to UTC round trip away from transitions") {
    const Timezone tz = Timezone::us_eastern();
    for (const char* ts : {"2018-06-04T16:00:00Z", "2019-01-07T21:00:00Z"}) {
        const auto t = parse_timestamp(ts);
        const CivilTime local = tz.to_local(*t);
        CHECK(tz.to_utc(local) == *t);
    }
}

TEST_CASE("fixed offset timezones") {
    const Timezone tz = Timezone::parse("UTC+05:30");
    const auto t = parse_timestamp("2018-06-01T00:00:00Z");
    const CivilTime local = tz.to_local(*t);
    CHECK(local.hour == 5);
    CHECK(local.minute == 30);
    CHECK(Timezone::parse("UTC").offset_seconds_at(*t) == 0);
    CHECK_THROWS(Timezone::parse("Mars/Olympus"));
}
