#include "fintwit/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fintwit/common.hpp"
#include "fintwit/csv.hpp"

namespace fintwit::ingest {

namespace {

bool has_json_extension(const std::string& path) {
    for (const char* ext : {".json", ".jsonl", ".ndjson"}) {
        const std::string e = ext;
        if (path.size() >= e.size() && path.compare(path.size() - e.size(), e.size(), e) == 0) {
            return true;
        }
    }
    return false;
}

std::optional<std::int64_t> parse_count(const std::string& s) {
    if (s.empty()) return std::nullopt;
    std::size_t idx = 0;
    try {
        const long long v = std::stoll(s, &idx);
        if (idx != s.size()) return std::nullopt;
        return v;
    } catch (...) {
        return std::nullopt;
    }
}

std::optional<double> parse_real(const std::string& s) {
    if (s.empty()) return std::nullopt;
    std::size_t idx = 0;
    try {
        const double v = std::stod(s, &idx);
        if (idx != s.size()) return std::nullopt;
        return v;
    } catch (...) {
        return std::nullopt;
    }
}

// Builds a Tweet from field strings; returns the reject reason on failure.
std::optional<std::string> make_tweet(const std::map<std::string, std::string>& row, Tweet& out) {
    for (const char* key : {"id", "author_id", "timestamp", "text", "likes", "comments",
                            "retweets", "ticker"}) {
        if (!row.count(key)) return std::string("missing column: ") + key;
    }
    const auto ts = parse_timestamp(row.at("timestamp"));
    if (!ts) return "unparseable timestamp: " + row.at("timestamp");
    const auto likes = parse_count(row.at("likes"));
    const auto comments = parse_count(row.at("comments"));
    const auto retweets = parse_count(row.at("retweets"));
    if (!likes || !comments || !retweets) return "unparseable engagement count";
    if (*likes < 0 || *comments < 0 || *retweets < 0) return "negative engagement count";
    out.id = row.at("id");
    out.author_id = row.at("author_id");
    out.timestamp = *ts;
    out.text = row.at("text");
    out.likes = *likes;
    out.comments = *comments;
    out.retweets = *retweets;
    out.ticker = row.at("ticker");
    return std::nullopt;
}

TweetLoadResult load_tweets_csv(const std::string& path, const std::string& ticker) {
    const auto records = read_csv(path);
    TweetLoadResult result;
    if (records.empty()) {
        warn("tweet file is empty: " + path);
        return result;
    }
    const auto& header = records.front();
    std::size_t candidates = 0;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        std::map<std::string, std::string> row;
        for (std::size_t c = 0; c < header.size() && c < rec.size(); ++c) row[header[c]] = rec[c];

        // Ticker mismatch is a filter, not a reject; but count schema errors
        // before filtering so a wrong header still trips the 10% cutoff.
        Tweet t;
        auto err = make_tweet(row, t);
        if (err) {
            ++candidates;
            result.rejects.push_back({r + 1, *err});
            continue;
        }
        if (t.ticker != ticker) continue;
        ++candidates;
        result.tweets.push_back(std::move(t));
    }
    if (candidates > 0 && result.rejects.size() * 10 > candidates) {
        throw FatalError("rejected " + std::to_string(result.rejects.size()) + " of " +
                         std::to_string(candidates) + " rows in " + path +
                         " (over 10%); schema mismatch?");
    }
    return result;
}

TweetLoadResult load_tweets_jsonl(const std::string& path, const std::string& ticker) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot open file: " + path);
    TweetLoadResult result;
    std::string line;
    std::size_t line_no = 0;
    std::size_t candidates = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::map<std::string, std::string> row;
        try {
            const auto j = nlohmann::json::parse(line);
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (it.value().is_string()) {
                    row[it.key()] = it.value().get<std::string>();
                } else if (it.value().is_number_integer()) {
                    row[it.key()] = std::to_string(it.value().get<std::int64_t>());
                } else if (it.value().is_number()) {
                    std::ostringstream ss;
                    ss << it.value().get<double>();
                    row[it.key()] = ss.str();
                }
            }
        } catch (const nlohmann::json::exception& e) {
            ++candidates;
            result.rejects.push_back({line_no, std::string("bad JSON: ") + e.what()});
            continue;
        }
        Tweet t;
        auto err = make_tweet(row, t);
        if (err) {
            ++candidates;
            result.rejects.push_back({line_no, *err});
            continue;
        }
        if (t.ticker != ticker) continue;
        ++candidates;
        result.tweets.push_back(std::move(t));
    }
    if (line_no == 0) warn("tweet file is empty: " + path);
    if (candidates > 0 && result.rejects.size() * 10 > candidates) {
        throw FatalError("rejected " + std::to_string(result.rejects.size()) + " of " +
                         std::to_string(candidates) + " rows in " + path +
                         " (over 10%); schema mismatch?");
    }
    return result;
}

}  // namespace

TweetLoadResult load_tweets(const std::string& path, const std::string& ticker) {
    TweetLoadResult result = has_json_extension(path) ? load_tweets_jsonl(path, ticker)
                                                      : load_tweets_csv(path, ticker);
    std::stable_sort(result.tweets.begin(), result.tweets.end(),
                     [](const Tweet& a, const Tweet& b) { return a.timestamp < b.timestamp; });
    if (result.tweets.empty() && result.rejects.empty()) {
        warn("no tweets loaded for ticker " + ticker + " from " + path);
    }
    return result;
}

std::vector<PriceBar> load_bars(const std::string& path, const std::string& ticker) {
    const auto records = read_csv(path);
    if (records.empty()) throw FatalError("bar file is empty: " + path);
    const auto& header = records.front();
    auto col = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return static_cast<int>(i);
        }
        return -1;
    };
    const int c_date = col("date"), c_open = col("open"), c_high = col("high");
    const int c_low = col("low"), c_close = col("close"), c_volume = col("volume");
    const int c_ticker = col("ticker");  // optional
    if (c_date < 0 || c_open < 0 || c_high < 0 || c_low < 0 || c_close < 0 || c_volume < 0) {
        throw FatalError("bar file missing required columns (date,open,high,low,close,volume): " +
                         path);
    }

    std::vector<PriceBar> bars;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        auto field = [&](int c) -> std::string {
            return c >= 0 && static_cast<std::size_t>(c) < rec.size() ? rec[c] : std::string();
        };
        if (c_ticker >= 0 && field(c_ticker) != ticker) continue;
        PriceBar b;
        const auto date = parse_date(field(c_date));
        const auto open = parse_real(field(c_open));
        const auto high = parse_real(field(c_high));
        const auto low = parse_real(field(c_low));
        const auto close = parse_real(field(c_close));
        const auto volume = parse_real(field(c_volume));
        if (!date || !open || !high || !low || !close || !volume) {
            throw FatalError("malformed bar row " + std::to_string(r + 1) + " in " + path);
        }
        b.date = *date;
        b.open = *open;
        b.high = *high;
        b.low = *low;
        b.close = *close;
        b.volume = *volume;
        b.ticker = ticker;
        if (b.volume < 0) throw FatalError("negative volume on " + b.date.to_string());
        if (b.low > std::min(b.open, b.close) || b.high < std::max(b.open, b.close)) {
            throw FatalError("OHLC sanity violation on " + b.date.to_string() + " in " + path);
        }
        bars.push_back(b);
    }
    std::sort(bars.begin(), bars.end(),
              [](const PriceBar& a, const PriceBar& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < bars.size(); ++i) {
        if (bars[i].date == bars[i - 1].date) {
            throw FatalError("duplicate bar date " + bars[i].date.to_string() + " in " + path);
        }
    }
    return bars;
}

AlignedCorpus window(std::vector<Tweet> tweets, std::vector<PriceBar> bars, const Date& start,
                     const Date& end, const Timezone& tz) {
    if (start > end) throw FatalError("window start after end");
    AlignedCorpus corpus;
    corpus.window_start = start;
    corpus.window_end = end;
    const std::size_t n_tweets_in = tweets.size();
    const std::size_t n_bars_in = bars.size();

    for (auto& t : tweets) {
        const Date local = tz.to_local(t.timestamp).date;
        if (local >= start && local <= end) corpus.tweets.push_back(std::move(t));
    }
    for (auto& b : bars) {
        if (b.date >= start && b.date <= end) corpus.bars.push_back(std::move(b));
    }
    if (corpus.tweets.empty() || corpus.bars.empty()) {
        throw FatalError("empty corpus after windowing to [" + start.to_string() + ", " +
                         end.to_string() + "]: " + std::to_string(corpus.tweets.size()) + "/" +
                         std::to_string(n_tweets_in) + " tweets, " +
                         std::to_string(corpus.bars.size()) + "/" + std::to_string(n_bars_in) +
                         " bars retained");
    }
    return corpus;
}

std::int64_t total_engagement(const Tweet& t) { return t.likes + t.comments + t.retweets; }

std::vector<Tweet> filter_engagement(const std::vector<Tweet>& tweets, std::int64_t threshold) {
    std::vector<Tweet> kept;
    kept.reserve(tweets.size());
    for (const auto& t : tweets) {
        if (total_engagement(t) >= threshold) kept.push_back(t);
    }
    return kept;
}

}  // namespace fintwit::ingest
