#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fintwit/datetime.hpp"

namespace fintwit::ingest {

struct Tweet {
    std::string id;
    std::string author_id;
    EpochSeconds timestamp = 0;  // UTC
    std::string text;
    std::int64_t likes = 0;
    std::int64_t comments = 0;
    std::int64_t retweets = 0;
    std::string ticker;
};

struct PriceBar {
    Date date;
    double open = 0;
    double high = 0;
    double low = 0;
    double close = 0;
    double volume = 0;
    std::string ticker;
};

struct AlignedCorpus {
    std::vector<Tweet> tweets;  // sorted by timestamp
    std::vector<PriceBar> bars;  // strictly increasing dates
    Date window_start;
    Date window_end;
};

struct RejectedRow {
    std::size_t line = 0;
    std::string reason;
};

struct TweetLoadResult {
    std::vector<Tweet> tweets;
    std::vector<RejectedRow> rejects;
};

// Reads tweets from CSV (header required) or line-JSON, auto-detected by
// extension (.json/.jsonl/.ndjson). Rows for other tickers are dropped
// silently; malformed rows go to the rejects report. A reject rate above
// 10% aborts, since that signals a schema mismatch rather than bad rows.
TweetLoadResult load_tweets(const std::string& path, const std::string& ticker);

// Daily OHLCV bars, one file per ticker (an optional ticker column is
// filtered on). Duplicate dates and OHLC sanity violations are fatal.
std::vector<PriceBar> load_bars(const std::string& path, const std::string& ticker);

// Crops both series inclusively to [start, end]. Tweet membership uses the
// exchange-local calendar date. Empty result on either side is fatal.
AlignedCorpus window(std::vector<Tweet> tweets, std::vector<PriceBar> bars, const Date& start,
                     const Date& end, const Timezone& tz);

inline Date default_window_start() { return Date{2018, 6, 1}; }
inline Date default_window_end() { return Date{2019, 12, 31}; }

constexpr std::int64_t kDefaultEngagementThreshold = 40;

std::int64_t total_engagement(const Tweet& t);

// Keeps tweets with total engagement >= threshold, preserving order.
std::vector<Tweet> filter_engagement(const std::vector<Tweet>& tweets, std::int64_t threshold);

}  // namespace fintwit::ingest
