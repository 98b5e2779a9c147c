#include <algorithm>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fintwit/common.hpp"
#include "fintwit/csv.hpp"
#include "fintwit/featurize.hpp"
#include "fintwit/harness.hpp"
#include "fintwit/rng.hpp"

namespace fintwit::harness {

namespace {

const std::vector<std::string>& neutral_words() {
    static const std::vector<std::string> words = {
        "market",  "shares",  "stock",   "earnings", "report",  "watching", "holding",
        "chart",   "candles", "trading", "breakout", "support", "levels",   "guidance",
        "revenue", "filing",  "session", "analyst",  "news",    "update",   "launch",
        "product", "quarter", "numbers", "range"};
    return words;
}

const std::vector<std::string>& positive_words() {
    static const std::vector<std::string> words = {"good",  "great",   "strong", "bullish",
                                                   "beat",  "rally",   "upgrade", "growth",
                                                   "win",   "soaring"};
    return words;
}

const std::vector<std::string>& negative_words() {
    static const std::vector<std::string> words = {"bad",  "terrible", "weak",     "bearish",
                                                   "miss", "selloff",  "downgrade", "loss",
                                                   "crash", "fading"};
    return words;
}

struct SynthTweet {
    EpochSeconds ts;
    std::string id, author, text;
    long long likes, comments, retweets;
};

// Poisson draw with a normal shortcut for large rates; Knuth's product
// method degrades linearly in lambda.
int sample_count(Rng& rng, double lambda) {
    if (lambda < 50.0) return rng.poisson(lambda);
    const double v = lambda + std::sqrt(lambda) * rng.normal();
    return v < 0 ? 0 : static_cast<int>(v + 0.5);
}

}  // namespace

double fixture_bayes_accuracy(const FixtureParams& p) {
    const double planted_side = std::max(p.p_up_planted, 1.0 - p.p_up_planted);
    const double unplanted_side = std::max(p.p_up_unplanted, 1.0 - p.p_up_unplanted);
    return p.p_planted * planted_side + (1.0 - p.p_planted) * unplanted_side;
}

FixtureFiles generate_fixture(const FixtureParams& params, const std::string& outdir) {
    if (params.days < 10) throw FatalError("fixture needs at least 10 trading days");
    std::filesystem::create_directories(outdir);
    const Timezone tz = Timezone::parse(params.timezone);
    Rng rng(derive_seed(params.seed, 0xf1c5));

    // Consecutive weekdays.
    std::vector<Date> days;
    Date d = params.start;
    while (static_cast<int>(days.size()) < params.days) {
        if (!is_weekend(d)) days.push_back(d);
        d = add_days(d, 1);
    }

    std::vector<int> planted(days.size()), labels(days.size());
    for (std::size_t i = 0; i < days.size(); ++i) {
        planted[i] = rng.bernoulli(params.p_planted) ? 1 : 0;
        const double p_up = planted[i] ? params.p_up_planted : params.p_up_unplanted;
        labels[i] = rng.bernoulli(p_up) ? 1 : 0;
    }

    // Price path: close-minus-open sign realizes the label; overnight gaps
    // and volumes are noise.
    std::vector<ingest::PriceBar> bars(days.size());
    double prev_close = 100.0;
    for (std::size_t i = 0; i < days.size(); ++i) {
        ingest::PriceBar& b = bars[i];
        b.date = days[i];
        b.ticker = params.ticker;
        b.open = prev_close * (1.0 + rng.uniform(-0.003, 0.003));
        const double ret = rng.uniform(0.002, 0.015);
        b.close = b.open * (labels[i] ? 1.0 + ret : 1.0 - ret);
        const double hi_pad = rng.uniform(0.0, 0.004);
        const double lo_pad = rng.uniform(0.0, 0.004);
        b.high = std::max(b.open, b.close) * (1.0 + hi_pad);
        b.low = std::min(b.open, b.close) * (1.0 - lo_pad);
        b.volume = static_cast<double>(1000000 + static_cast<long long>(rng.below(4000000)));
        prev_close = b.close;
    }

    // Tweets per target day, bucket by bucket. Evening buckets land on the
    // calendar day before the target, so weekend posts feed Monday windows.
    //
    // Heavy-tailed author popularity plus day-level engagement jitter and
    // sentiment tone decorrelate the other Twitter columns from the tweet
    // count; the count in the 20-22 bucket is the one clean carrier of the
    // planted signal. Authors churn after a finite activity window, which
    // keeps cumulative per-author engagement (and with it the writer-score
    // column) stationary instead of trending over the corpus.
    const int n_authors = 150;
    const int author_lifetime = 80;  // calendar days
    std::vector<double> author_popularity(n_authors);
    std::vector<int> author_start(n_authors);
    const int total_span = static_cast<int>(days_from_civil(days.back()) -
                                            days_from_civil(days.front()));
    for (int u = 0; u < n_authors; ++u) {
        author_popularity[u] = std::exp(rng.normal(0.0, 1.3));
        author_start[u] =
            static_cast<int>(rng.below(static_cast<std::uint64_t>(total_span + author_lifetime))) -
            author_lifetime / 2;
    }
    auto pick_author = [&](int day_offset) {
        for (int tries = 0; tries < 200; ++tries) {
            const auto u = static_cast<std::size_t>(rng.below(n_authors));
            if (day_offset >= author_start[u] &&
                day_offset < author_start[u] + author_lifetime) {
                return u;
            }
        }
        return rng.below(n_authors);  // degenerate seed; keep going
    };

    std::vector<SynthTweet> tweets;
    long long next_id = 1;
    for (std::size_t i = 1; i < days.size(); ++i) {
        const int day_offset = static_cast<int>(days_from_civil(days[i]) -
                                                days_from_civil(days.front()));
        const double engagement_jitter = std::exp(rng.uniform(-1.1, 1.1));
        const double tone = rng.uniform(-0.6, 0.6);
        for (int b = 0; b < feat::kRows; ++b) {
            const double rate = (planted[i] == 1 && b == 2) ? params.planted_bucket_rate
                                                            : params.base_bucket_rate;
            const int count = rng.poisson(rate);
            const int start_hour = (16 + 2 * b) % 24;
            const Date date = b < 4 ? add_days(days[i], -1) : days[i];
            for (int k = 0; k < count; ++k) {
                SynthTweet t;
                CivilTime local;
                local.date = date;
                local.hour = start_hour + static_cast<int>(rng.below(2));
                local.minute = static_cast<int>(rng.below(60));
                local.second = static_cast<int>(rng.below(60));
                t.ts = tz.to_utc(local);
                char idbuf[24];
                std::snprintf(idbuf, sizeof(idbuf), "t%08lld", next_id++);
                t.id = idbuf;
                const std::size_t author = pick_author(day_offset);
                t.author = "user" + std::to_string(author);
                const int n_words = 3 + static_cast<int>(rng.below(6));
                for (int w = 0; w < n_words; ++w) {
                    if (w > 0) t.text += ' ';
                    if (rng.bernoulli(0.5)) {
                        t.text += neutral_words()[rng.below(neutral_words().size())];
                    } else if (rng.bernoulli(0.5 + 0.5 * tone)) {
                        t.text += positive_words()[rng.below(positive_words().size())];
                    } else {
                        t.text += negative_words()[rng.below(negative_words().size())];
                    }
                }
                // floors keep every tweet at or above the engagement-40 cut
                const double reach = author_popularity[author] * engagement_jitter;
                t.likes = 20 + sample_count(rng, 25.0 * reach);
                t.comments = 10 + sample_count(rng, 12.0 * reach);
                t.retweets = 10 + sample_count(rng, 12.0 * reach);
                tweets.push_back(std::move(t));
            }
        }
    }
    std::sort(tweets.begin(), tweets.end(), [](const SynthTweet& a, const SynthTweet& b) {
        return a.ts != b.ts ? a.ts < b.ts : a.id < b.id;
    });

    FixtureFiles files;
    files.tweets_path = outdir + "/tweets.csv";
    files.bars_path = outdir + "/bars.csv";
    files.manifest_path = outdir + "/manifest.json";

    {
        std::ofstream out(files.tweets_path, std::ios::binary);
        if (!out) throw FatalError("cannot write " + files.tweets_path);
        out << "id,author_id,timestamp,text,likes,comments,retweets,ticker\n";
        for (const auto& t : tweets) {
            out << t.id << ',' << t.author << ',' << format_timestamp_utc(t.ts) << ','
                << csv_escape(t.text) << ',' << t.likes << ',' << t.comments << ','
                << t.retweets << ',' << params.ticker << '\n';
        }
    }
    {
        std::ofstream out(files.bars_path, std::ios::binary);
        if (!out) throw FatalError("cannot write " + files.bars_path);
        out << "date,open,high,low,close,volume\n";
        char buf[160];
        for (const auto& b : bars) {
            std::snprintf(buf, sizeof(buf), "%s,%.4f,%.4f,%.4f,%.4f,%.0f\n",
                          b.date.to_string().c_str(), b.open, b.high, b.low, b.close, b.volume);
            out << buf;
        }
    }
    {
        nlohmann::ordered_json m;
        m["seed"] = params.seed;
        m["days"] = params.days;
        m["start"] = params.start.to_string();
        m["timezone"] = params.timezone;
        m["ticker"] = params.ticker;
        m["p_planted"] = params.p_planted;
        m["p_up_planted"] = params.p_up_planted;
        m["p_up_unplanted"] = params.p_up_unplanted;
        m["base_bucket_rate"] = params.base_bucket_rate;
        m["planted_bucket_rate"] = params.planted_bucket_rate;
        m["planted_days"] = std::count(planted.begin(), planted.end(), 1);
        m["up_days"] = std::count(labels.begin(), labels.end(), 1);
        m["n_tweets"] = tweets.size();
        m["bayes_accuracy"] = fixture_bayes_accuracy(params);
        std::ofstream out(files.manifest_path, std::ios::binary);
        if (!out) throw FatalError("cannot write " + files.manifest_path);
        out << m.dump(2) << '\n';
    }
    return files;
}

}  // namespace fintwit::harness
