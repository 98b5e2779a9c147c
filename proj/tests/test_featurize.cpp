#include <doctest.h>

#include <map>

#include "fintwit/common.hpp"
#include "fintwit/featurize.hpp"
#include "fintwit/rng.hpp"

using namespace fintwit;
using namespace fintwit::feat;

namespace {

ingest::Tweet make_tweet(const std::string& id, const std::string& author, const std::string& ts,
                         long long likes, long long comments, long long retweets,
                         const std::string& text = "hello market") {
    ingest::Tweet t;
    t.id = id;
    t.author_id = author;
    t.timestamp = *parse_timestamp(ts);
    t.likes = likes;
    t.comments = comments;
    t.retweets = retweets;
    t.text = text;
    t.ticker = "SYNTH";
    return t;
}

ingest::PriceBar make_bar(const Date& d, double open, double close) {
    ingest::PriceBar b;
    b.date = d;
    b.open = open;
    b.close = close;
    b.high = std::max(open, close) + 1;
    b.low = std::min(open, close) - 1;
    b.volume = 1000;
    b.ticker = "SYNTH";
    return b;
}

}  // namespace

TEST_CASE("total engagement is the sum of the three counts") {
    CHECK(total_engagement(make_tweet("1", "a", "2018-06-01T10:00:00Z", 10, 5, 3)) == 18);
    CHECK(total_engagement(make_tweet("2", "a", "2018-06-01T10:00:00Z", 0, 0, 0)) == 0);
    CHECK(total_engagement(make_tweet("3", "a", "2018-06-01T10:00:00Z", 40, 0, 0)) == 40);
}

TEST_CASE("writer score is an exclusive prefix sum per author") {
    WriterScoreLedger ledger;
    const auto t1 = make_tweet("1", "a", "2018-06-01T10:00:00Z", 10, 5, 3);   // TE 18
    const auto t2 = make_tweet("2", "a", "2018-06-01T11:00:00Z", 10, 10, 2);  // TE 22
    const auto t3 = make_tweet("3", "a", "2018-06-01T12:00:00Z", 1, 1, 1);
    CHECK(ledger.writer_score(t1) == 0);  // first-ever post
    CHECK(ledger.writer_score(t2) == 18);
    CHECK(ledger.writer_score(t3) == 40);
}

TEST_CASE("writer score sequence 5,7,9 gives 0,5,12") {
    WriterScoreLedger ledger;
    CHECK(ledger.writer_score(make_tweet("1", "a", "2018-06-01T10:00:00Z", 5, 0, 0)) == 0);
    CHECK(ledger.writer_score(make_tweet("2", "a", "2018-06-01T11:00:00Z", 7, 0, 0)) == 5);
    CHECK(ledger.writer_score(make_tweet("3", "a", "2018-06-01T12:00:00Z", 9, 0, 0)) == 12);
}

TEST_CASE("posts sharing a timestamp never see each other") {
    WriterScoreLedger ledger;
    CHECK(ledger.writer_score(make_tweet("1", "a", "2018-06-01T10:00:00Z", 5, 0, 0)) == 0);
    CHECK(ledger.writer_score(make_tweet("2", "a", "2018-06-01T10:00:00Z", 7, 0, 0)) == 0);
    CHECK(ledger.writer_score(make_tweet("3", "a", "2018-06-01T10:00:01Z", 1, 0, 0)) == 12);
}

TEST_CASE("feeding the ledger out of order is fatal") {
    WriterScoreLedger ledger;
    ledger.writer_score(make_tweet("1", "a", "2018-06-01T10:00:00Z", 5, 0, 0));
    CHECK_THROWS_AS(ledger.writer_score(make_tweet("2", "a", "2018-06-01T09:00:00Z", 5, 0, 0)),
                    FatalError);
}

TEST_CASE("writer score matches a brute-force recomputation on random tweets") {
    // Oracle: WS(k) = sum of TE over the author's posts with strictly
    // earlier timestamps, recomputed independently per tweet.
    Rng rng(1234);
    std::vector<ingest::Tweet> tweets;
    for (int i = 0; i < 100; ++i) {
        const int author = static_cast<int>(rng.below(7));
        const int hour = static_cast<int>(rng.below(24));
        const int day = 1 + static_cast<int>(rng.below(20));
        char ts[32];
        std::snprintf(ts, sizeof(ts), "2018-06-%02dT%02d:00:00Z", day, hour);
        tweets.push_back(make_tweet("t" + std::to_string(i), "a" + std::to_string(author), ts,
                                    static_cast<long long>(rng.below(50)),
                                    static_cast<long long>(rng.below(20)),
                                    static_cast<long long>(rng.below(20))));
    }
    std::sort(tweets.begin(), tweets.end(),
              [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });

    WriterScoreLedger ledger;
    for (std::size_t k = 0; k < tweets.size(); ++k) {
        long long expected = 0;
        for (std::size_t j = 0; j < tweets.size(); ++j) {
            if (tweets[j].author_id == tweets[k].author_id &&
                tweets[j].timestamp < tweets[k].timestamp) {
                expected += total_engagement(tweets[j]);
            }
        }
        CHECK(ledger.writer_score(tweets[k]) == expected);  // exact, zero tolerance
    }
}

TEST_CASE("bucket boundaries are half open") {
    CHECK(bucket_index_for_hour(16) == 0);
    CHECK(bucket_index_for_hour(17) == 0);
    CHECK(bucket_index_for_hour(18) == 1);
    CHECK(bucket_index_for_hour(20) == 2);
    CHECK(bucket_index_for_hour(0) == 4);
    CHECK(bucket_index_for_hour(15) == 11);

    const Timezone tz = Timezone::utc();
    std::vector<ingest::Tweet> tweets = {
        make_tweet("a", "u", "2018-06-04T16:00:00Z", 1, 0, 0),  // window start, bucket 16-18
        make_tweet("b", "u", "2018-06-05T15:59:59Z", 1, 0, 0),  // bucket 14-16
        make_tweet("c", "u", "2018-06-05T16:00:00Z", 1, 0, 0),  // beyond window end
    };
    const auto signals = compute_signals(tweets, {}, {});
    const EpochSeconds start = *parse_timestamp("2018-06-04T16:00:00Z");
    const EpochSeconds end = *parse_timestamp("2018-06-05T16:00:00Z");
    const auto buckets = bucket(signals, start, end, tz);
    CHECK(buckets[0].size() == 1);
    CHECK(buckets[11].size() == 1);
    std::size_t total = 0;
    for (const auto& b : buckets) total += b.size();
    CHECK(total == 2);

    // no tweets in window: 12 empty groups
    const auto empty = bucket(signals, start - 900000, start - 800000, tz);
    for (const auto& b : empty) CHECK(b.empty());
}

TEST_CASE("twitter matrix sums per bucket") {
    const Timezone tz = Timezone::utc();
    std::vector<ingest::Tweet> tweets = {
        make_tweet("a", "u1", "2018-06-04T17:00:00Z", 10, 5, 3, "good"),
        make_tweet("b", "u2", "2018-06-04T17:30:00Z", 2, 1, 1, "terrible"),
    };
    const auto signals = compute_signals(tweets, {}, {});
    const auto buckets = bucket(signals, *parse_timestamp("2018-06-04T16:00:00Z"),
                                *parse_timestamp("2018-06-05T16:00:00Z"), tz);
    const MatrixXd m = twitter_matrix(buckets, signals);
    REQUIRE(m.rows() == 12);
    REQUIRE(m.cols() == 8);
    CHECK(m(0, 1) == 6);  // comments
    CHECK(m(0, 2) == 12);
    CHECK(m(0, 3) == 4);
    CHECK(m(0, 7) == 2);  // tweet volume
    CHECK(m(0, 6) == 0);  // +1 and -1 polarity cancel
    // all other rows are zero
    for (int r = 1; r < 12; ++r) {
        CHECK(m.row(r).cwiseAbs().sum() == 0);
    }
    // empty buckets produce zero rows even with one populated row
    CHECK(m(5, 7) == 0);
}

TEST_CASE("price matrix replicates the prior-day row") {
    const auto bar = make_bar(Date{2018, 6, 4}, 100, 105);
    const MatrixXd m = price_matrix(bar, {1, 0, 1});
    REQUIRE(m.rows() == 12);
    REQUIRE(m.cols() == 8);
    for (int r = 0; r < 12; ++r) {
        CHECK(m(r, 0) == 100);
        CHECK(m(r, 3) == 105);
        CHECK(m(r, 5) == 1);
        CHECK(m(r, 6) == 0);
        CHECK(m(r, 7) == 1);
    }
    // replication means rank one
    Eigen::FullPivLU<MatrixXd> lu(m);
    CHECK(lu.rank() <= 1);
}

TEST_CASE("label maps sign of close minus open, ties to zero") {
    CHECK(label(make_bar(Date{2018, 6, 4}, 100, 105)) == 1);
    CHECK(label(make_bar(Date{2018, 6, 4}, 100, 95)) == 0);
    CHECK(label(make_bar(Date{2018, 6, 4}, 100, 100)) == 0);
}

TEST_CASE("assemble concatenates halves and checks shapes") {
    const MatrixXd t = MatrixXd::Zero(12, 8);
    const MatrixXd p = MatrixXd::Zero(12, 8);
    std::vector<std::string> names(proposed_column_names().begin(),
                                   proposed_column_names().end());
    const auto fm = assemble(t, p, names, Date{2018, 6, 5});
    CHECK(fm.values.rows() == 12);
    CHECK(fm.values.cols() == 16);
    CHECK(fm.values.cwiseAbs().sum() == 0);
    CHECK(fm.column_names.size() == 16);

    CHECK_THROWS_AS(assemble(MatrixXd::Zero(11, 8), p, names, Date{2018, 6, 5}), FatalError);
}

TEST_CASE("bow matrix is deterministic and shape follows dim") {
    const Timezone tz = Timezone::utc();
    std::vector<ingest::Tweet> tweets = {
        make_tweet("a", "u1", "2018-06-04T17:00:00Z", 1, 0, 0, "market rally strong"),
        make_tweet("b", "u2", "2018-06-04T19:00:00Z", 1, 0, 0, "weak market selloff"),
    };
    const auto signals = compute_signals(tweets, {}, {});
    const auto buckets = bucket(signals, *parse_timestamp("2018-06-04T16:00:00Z"),
                                *parse_timestamp("2018-06-05T16:00:00Z"), tz);
    const MatrixXd m8a = bow_matrix(buckets, signals, 8, 42);
    const MatrixXd m8b = bow_matrix(buckets, signals, 8, 42);
    CHECK(m8a == m8b);
    CHECK(m8a.cols() == 8);
    CHECK(bow_matrix(buckets, signals, 24, 42).cols() == 24);
    // token counts are conserved
    CHECK(m8a.sum() == 6);
    // empty bucket rows are zero
    CHECK(m8a.row(6).cwiseAbs().sum() == 0);
}

namespace {

ingest::AlignedCorpus tiny_corpus() {
    ingest::AlignedCorpus corpus;
    corpus.window_start = Date{2018, 6, 1};
    corpus.window_end = Date{2018, 6, 30};
    // Mon Jun 4 .. Fri Jun 8, then Mon Jun 11
    corpus.bars = {
        make_bar(Date{2018, 6, 4}, 100, 101), make_bar(Date{2018, 6, 5}, 101, 100),
        make_bar(Date{2018, 6, 6}, 100, 102), make_bar(Date{2018, 6, 7}, 102, 103),
        make_bar(Date{2018, 6, 8}, 103, 101), make_bar(Date{2018, 6, 11}, 101, 104),
    };
    corpus.tweets = {
        make_tweet("1", "a", "2018-06-06T18:00:00Z", 50, 0, 0, "good market"),
        make_tweet("2", "a", "2018-06-07T02:00:00Z", 60, 0, 0, "bad news"),
        make_tweet("3", "b", "2018-06-09T15:00:00Z", 70, 0, 0, "weekend chatter"),  // Saturday
    };
    return corpus;
}

}  // namespace

TEST_CASE("dataset skips the first three bars and counts instances") {
    const auto instances = build_dataset(tiny_corpus(), {}, DatasetOptions{.timezone = "UTC"});
    // 6 bars -> instances for indices 3, 4, 5
    REQUIRE(instances.size() == 3);
    CHECK(instances[0].day == Date{2018, 6, 7});
    CHECK(instances[1].day == Date{2018, 6, 8});
    CHECK(instances[2].day == Date{2018, 6, 11});
    for (const auto& inst : instances) {
        CHECK(inst.x.values.rows() == 12);
        CHECK(inst.x.values.cols() == 16);
        // price half replicated
        for (int c = 8; c < 16; ++c) {
            CHECK(inst.x.values.col(c).maxCoeff() == inst.x.values.col(c).minCoeff());
        }
        // lags are binary
        for (int c = 13; c < 16; ++c) {
            const double v = inst.x.values(0, c);
            CHECK((v == 0.0 || v == 1.0));
        }
    }
    // labels: bars[3]=up, bars[4]=down, bars[5]=up
    CHECK(instances[0].label == 1);
    CHECK(instances[1].label == 0);
    CHECK(instances[2].label == 1);
}

TEST_CASE("weekend tweets land in the next trading day's window") {
    const auto instances = build_dataset(tiny_corpus(), {}, DatasetOptions{.timezone = "UTC"});
    // Saturday tweet (Jun 9, 15:00) belongs to Monday Jun 11's window
    const auto& monday = instances[2];
    const int vol_col = 7;
    CHECK(monday.x.values.col(vol_col).sum() == 1);
    // and to the 14-16 bucket
    CHECK(monday.x.values(11, vol_col) == 1);
}

TEST_CASE("tweet volume column sums to the windowed tweet count") {
    const auto corpus = tiny_corpus();
    const auto instances = build_dataset(corpus, {}, DatasetOptions{.timezone = "UTC"});
    double total = 0;
    for (const auto& inst : instances) total += inst.x.values.col(7).sum();
    CHECK(total == 3);  // every tweet falls in exactly one instance window
}

TEST_CASE("fewer than four bars yields no instances") {
    auto corpus = tiny_corpus();
    corpus.bars.resize(3);
    CHECK(build_dataset(corpus, {}, DatasetOptions{.timezone = "UTC"}).empty());
}

TEST_CASE("prior-close window policy shifts the tweet window back") {
    DatasetOptions target{.window_end = WindowEnd::kTargetClose, .timezone = "UTC"};
    DatasetOptions prior{.window_end = WindowEnd::kPriorClose, .timezone = "UTC"};
    const auto corpus = tiny_corpus();
    const auto a = build_dataset(corpus, {}, target);
    const auto b = build_dataset(corpus, {}, prior);
    REQUIRE(a.size() == b.size());
    // Tweet "1" (Jun 6 18:00) is in the Jun 7 target window under
    // target_close but in the Jun 7 instance's window under prior_close
    // only if it falls before Jun 6 16:00; it does not, so the prior-close
    // Jun 7 instance is empty of tweets.
    CHECK(a[0].x.values.col(7).sum() == 2);
    CHECK(b[0].x.values.col(7).sum() == 0);
    // under prior_close that tweet belongs to the Jun 8 instance instead
    CHECK(b[1].x.values.col(7).sum() == 2);
}

TEST_CASE("feature set variants produce the documented widths") {
    const auto corpus = tiny_corpus();
    auto width = [&](FeatureSet fs) {
        DatasetOptions o{.feature_set = fs, .timezone = "UTC"};
        return build_dataset(corpus, {}, o).front().x.values.cols();
    };
    CHECK(width(FeatureSet::kProposed) == 16);
    CHECK(width(FeatureSet::kBow8) == 16);
    CHECK(width(FeatureSet::kBow16) == 24);
    CHECK(width(FeatureSet::kBow24) == 32);
    CHECK(width(FeatureSet::kSentimentPrice) == 11);
    CHECK(width(FeatureSet::kPriceOnly) == 8);
}

TEST_CASE("scaler z-scores columns and passes degenerate ones through") {
    std::vector<LabeledInstance> train(2);
    train[0].x.values = MatrixXd::Zero(12, 3);
    train[1].x.values = MatrixXd::Zero(12, 3);
    // col 0: constant 5; col 1: mean 10 std 2 (values 8, 12); col 2: zeros
    train[0].x.values.col(0).setConstant(5);
    train[1].x.values.col(0).setConstant(5);
    train[0].x.values.col(1).setConstant(8);
    train[1].x.values.col(1).setConstant(12);

    const Scaler scaler = Scaler::fit(train);
    MatrixXd probe = MatrixXd::Zero(12, 3);
    probe.col(0).setConstant(5);
    probe.col(1).setConstant(12);
    const MatrixXd scaled = scaler.apply(probe);
    CHECK(scaled(0, 0) == 5.0);                      // constant column unchanged
    CHECK(scaled(0, 1) == doctest::Approx(1.0));     // (12-10)/2
    CHECK(scaled(0, 2) == 0.0);

    // single application differs from double application on varying columns
    const MatrixXd twice = scaler.apply(scaled);
    CHECK(twice(0, 1) != scaled(0, 1));

    // fingerprints identify the fitted parameters
    const Scaler again = Scaler::fit(train);
    CHECK(again.fingerprint() == scaler.fingerprint());
}

TEST_CASE("instance JSON line round trips") {
    const auto instances = build_dataset(tiny_corpus(), {}, DatasetOptions{.timezone = "UTC"});
    const std::string line = instance_to_json_line(instances[0]);
    const auto back = instance_from_json_line(line);
    CHECK(back.day == instances[0].day);
    CHECK(back.label == instances[0].label);
    CHECK(back.x.values == instances[0].x.values);
    CHECK(back.x.column_names == instances[0].x.column_names);
    // byte-stable serialization
    CHECK(instance_to_json_line(back) == line);
}
