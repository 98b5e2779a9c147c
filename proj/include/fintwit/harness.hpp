#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fintwit/explain.hpp"
#include "fintwit/featurize.hpp"
#include "fintwit/ingest.hpp"
#include "fintwit/nnet.hpp"

namespace fintwit::harness {

struct TickerSpec {
    std::string symbol;
    std::string tweets_path;
    std::string bars_path;
};

struct SplitFractions {
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;
};

struct ExperimentConfig {
    std::vector<TickerSpec> tickers;
    Date window_start = ingest::default_window_start();
    Date window_end = ingest::default_window_end();
    std::string timezone = "US/Eastern";
    std::int64_t engagement_threshold = ingest::kDefaultEngagementThreshold;
    feat::WindowEnd window_end_policy = feat::WindowEnd::kTargetClose;
    double pos_threshold = sentiment::kDefaultPolarityThreshold;
    double neg_threshold = sentiment::kDefaultPolarityThreshold;
    std::uint64_t bow_seed = 0x5eed;

    std::vector<feat::FeatureSet> feature_sets = {
        feat::FeatureSet::kProposed,      feat::FeatureSet::kBow8,
        feat::FeatureSet::kBow16,         feat::FeatureSet::kBow24,
        feat::FeatureSet::kSentimentPrice, feat::FeatureSet::kPriceOnly};
    std::vector<nnet::Arch> archs = {nnet::Arch::kCnn, nnet::Arch::kCnnLstm};

    int repeats = 10;
    SplitFractions split;
    std::uint64_t base_seed = 42;

    int epochs = 300;
    int batch_size = 16;
    double learning_rate = 1e-3;
    int dense_hidden = 32;
    int lstm_hidden = 32;
    std::vector<double> l2_grid = {0.0, 1e-4, 1e-3, 1e-2};
    int grid_repeats = 2;

    bool explain_enabled = true;
    bool explain_all_cells = false;
    int explain_samples = 2000;
    double explain_kernel_width = 0.25;
    double explain_ridge = 1e-3;
};

// JSON config file; FINTWIT_TWEETS / FINTWIT_BARS / FINTWIT_DATA_ROOT
// environment variables override the data paths.
ExperimentConfig load_experiment_config(const std::string& path);

struct SplitResult {
    std::vector<feat::LabeledInstance> train, val, test;
};

// Contiguous chronological blocks: floor for train and val, remainder to
// test. Any empty split is fatal.
SplitResult split_chronological(const std::vector<feat::LabeledInstance>& instances,
                                const SplitFractions& fractions);

// Scales the splits (fit on train only) and arranges the timestep windows
// the architecture needs.
nnet::DataSplits prepare_splits(const SplitResult& split, nnet::Arch arch);

// Same, but with a persisted scaler (e.g. from a checkpoint).
nnet::DataSplits prepare_splits(const SplitResult& split, nnet::Arch arch,
                                const feat::Scaler& scaler);

struct CellResult {
    std::string ticker;
    feat::FeatureSet feature_set = feat::FeatureSet::kProposed;
    nnet::Arch arch = nnet::Arch::kCnn;
    bool failed = false;
    std::string error;
    double chosen_l2 = 0;
    std::vector<std::pair<double, double>> grid_log;  // (l2, mean val acc)
    std::vector<double> train_acc, val_acc, test_acc;  // per repeat, percent
    double mean_train_acc = 0, mean_val_acc = 0, mean_test_acc = 0;
    int best_repeat = -1;  // by test accuracy
};

struct TickerExplanation {
    std::string ticker;
    std::vector<explain::Attribution> attributions;  // test instances, chronological
    explain::ImportanceTable feature_table;
    explain::ImportanceTable time_table;
    std::vector<explain::SeriesRow> series;
};

struct RunReport {
    std::vector<CellResult> cells;
    std::vector<TickerExplanation> explanations;
    bool any_failed = false;
};

// Full ticker x feature-set x arch cross; repeats per cell with seeds
// base+i; grid search once per cell. Explanations run on the best test
// repeat of each ticker's proposed-feature CNN cell. A failing cell is
// recorded and skipped, never fatal to the rest.
RunReport run_experiment(const ExperimentConfig& config);

// The derived per-repeat training seed, exposed for reproducing single runs.
std::uint64_t repeat_seed(const ExperimentConfig& config, const std::string& ticker,
                          feat::FeatureSet fs, nnet::Arch arch, int repeat);

// Accuracy table (one row per feature set, one column pair per ticker,
// three sections), importance tables, instance series and SVG plots.
void emit_reports(const RunReport& report, const ExperimentConfig& config,
                  const std::string& outdir);

// Synthetic corpus with a planted high-volume signal in the 20-22 bucket.
struct FixtureParams {
    std::uint64_t seed = 7;
    int days = 400;  // trading days
    Date start = Date{2018, 6, 1};
    std::string timezone = "US/Eastern";
    std::string ticker = "SYNTH";
    double p_planted = 0.5;
    double p_up_planted = 0.9;    // P(label up | planted)
    double p_up_unplanted = 0.1;  // balances the label marginal
    double base_bucket_rate = 5.0;    // mean tweets per two-hour bucket
    double planted_bucket_rate = 28.0;  // 20-22 bucket on planted days
};

struct FixtureFiles {
    std::string tweets_path;
    std::string bars_path;
    std::string manifest_path;
};

// Deterministic: a fixed seed reproduces the corpus byte for byte.
FixtureFiles generate_fixture(const FixtureParams& params, const std::string& outdir);

// Best achievable accuracy given the planted indicator, in [0.5, 1].
double fixture_bayes_accuracy(const FixtureParams& params);

}  // namespace fintwit::harness
