#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "fintwit/datetime.hpp"
#include "fintwit/ingest.hpp"
#include "fintwit/sentiment.hpp"
#include "fintwit/textprep.hpp"

namespace fintwit::feat {

using Eigen::MatrixXd;

using ingest::total_engagement;  // TE = likes + comments + retweets

inline constexpr int kRows = 12;
inline constexpr int kTwitterCols = 8;
inline constexpr int kPriceCols = 8;
inline constexpr int kProposedCols = kTwitterCols + kPriceCols;

// Two-hour intervals covering prior-close 16:00 through target-close 16:00.
const std::array<std::string, kRows>& row_times();
const std::array<std::string, kProposedCols>& proposed_column_names();

// Index of the two-hour interval containing an exchange-local hour.
int bucket_index_for_hour(int local_hour);

// Running per-author engagement history. Lookups return the sum of the
// author's strictly earlier posts; posts sharing a timestamp never see each
// other. Tweets must arrive in chronological order.
class WriterScoreLedger {
public:
    // Returns the writer score for this tweet, then queues its TE.
    std::int64_t writer_score(const ingest::Tweet& tweet);

private:
    void commit_pending();

    std::unordered_map<std::string, std::int64_t> committed_;
    std::vector<std::pair<std::string, std::int64_t>> pending_;
    EpochSeconds frontier_ = std::numeric_limits<EpochSeconds>::min();
};

// Per-tweet derived quantities, computed once over the filtered corpus.
struct TweetSignal {
    EpochSeconds timestamp = 0;
    std::int64_t writer_score = 0;
    std::int64_t comments = 0;
    std::int64_t likes = 0;
    std::int64_t retweets = 0;
    sentiment::SentimentScores scores;
    std::vector<std::string> tokens;  // stemmed, for BOW benchmarks
};

struct SignalOptions {
    double pos_threshold = sentiment::kDefaultPolarityThreshold;
    double neg_threshold = sentiment::kDefaultPolarityThreshold;
};

// Sequential pass: the writer-score ledger must advance in strict
// chronological order, everything after it is per-tweet independent.
std::vector<TweetSignal> compute_signals(const std::vector<ingest::Tweet>& tweets,
                                         const textprep::StopwordSet& stopwords,
                                         const SignalOptions& options = {});

// Tweet indices grouped into the 12 intervals of [win_start, win_end).
std::array<std::vector<std::size_t>, kRows> bucket(const std::vector<TweetSignal>& signals,
                                                   EpochSeconds win_start, EpochSeconds win_end,
                                                   const Timezone& tz);

// Columns: sum WS, sum comments, sum likes, sum retweets, sum AFINN,
// sum VADER, sum polarity, tweet count.
MatrixXd twitter_matrix(const std::array<std::vector<std::size_t>, kRows>& buckets,
                        const std::vector<TweetSignal>& signals);

// 1 if close > open, else 0 (ties count as not-up).
int label(const ingest::PriceBar& bar);

// Prior-day [open, high, low, close, volume, lag1, lag2, lag3] replicated
// into all 12 rows.
MatrixXd price_matrix(const ingest::PriceBar& prior_bar, const std::array<int, 3>& lags);

// Token counts hashed into dim buckets with a fixed seed.
MatrixXd bow_matrix(const std::array<std::vector<std::size_t>, kRows>& buckets,
                    const std::vector<TweetSignal>& signals, int dim, std::uint64_t hash_seed);

struct FeatureMatrix {
    MatrixXd values;  // kRows x column_names.size()
    Date day;         // target date t
    std::vector<std::string> column_names;
};

// Twitter half left of price half; both must have 12 rows.
FeatureMatrix assemble(const MatrixXd& twitter_half, const MatrixXd& price_half,
                       std::vector<std::string> column_names, const Date& day);

struct LabeledInstance {
    FeatureMatrix x;  // the t-1 matrix
    int label = 0;    // target at t
    Date day;         // t
};

enum class FeatureSet { kProposed, kBow8, kBow16, kBow24, kSentimentPrice, kPriceOnly };

std::string feature_set_name(FeatureSet fs);
FeatureSet feature_set_from_name(const std::string& name);

enum class WindowEnd { kTargetClose, kPriorClose };

struct DatasetOptions {
    FeatureSet feature_set = FeatureSet::kProposed;
    WindowEnd window_end = WindowEnd::kTargetClose;
    std::string timezone = "US/Eastern";
    std::uint64_t bow_seed = 0x5eed;
    SignalOptions signals;
};

// One instance per target bar starting at index 3 (three lags needed).
std::vector<LabeledInstance> build_dataset(const ingest::AlignedCorpus& corpus,
                                           const textprep::StopwordSet& stopwords,
                                           const DatasetOptions& options);

// Per-column z-scoring fitted over all 12 rows of the training matrices.
// Columns with vanishing spread pass through unscaled.
class Scaler {
public:
    Scaler() = default;

    static Scaler fit(const std::vector<LabeledInstance>& train);
    static Scaler fit_matrices(const std::vector<const MatrixXd*>& train);

    MatrixXd apply(const MatrixXd& x) const;
    std::uint64_t fingerprint() const { return fingerprint_; }

    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::VectorXd& stddev() const { return stddev_; }

    static Scaler from_params(Eigen::VectorXd mean, Eigen::VectorXd stddev);

private:
    void compute_fingerprint();

    Eigen::VectorXd mean_;
    Eigen::VectorXd stddev_;  // entries < kMinStd mark pass-through columns
    std::uint64_t fingerprint_ = 0;

    static constexpr double kMinStd = 1e-12;
};

// Line-JSON persistence: {day, label, row_times, column_names, values}.
std::string instance_to_json_line(const LabeledInstance& inst);
LabeledInstance instance_from_json_line(const std::string& line);
void write_instances_jsonl(const std::vector<LabeledInstance>& instances,
                           const std::string& path);
std::vector<LabeledInstance> read_instances_jsonl(const std::string& path);

}  // namespace fintwit::feat
