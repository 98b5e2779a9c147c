#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fintwit/common.hpp"
#include "fintwit/harness.hpp"
#include "fintwit/rng.hpp"

using namespace fintwit;
using namespace fintwit::harness;

namespace {

std::vector<feat::LabeledInstance> numbered_instances(int n) {
    std::vector<feat::LabeledInstance> out(n);
    for (int i = 0; i < n; ++i) {
        out[i].x.values = feat::MatrixXd::Constant(12, 16, i);
        out[i].label = i % 2;
        out[i].day = add_days(Date{2018, 6, 4}, i);
        out[i].x.day = out[i].day;
    }
    return out;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) {
        if (c == '\n') ++n;
    }
    return n;
}

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t n = 0, pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

}  // namespace

TEST_CASE("chronological split sizes and ordering") {
    const auto instances = numbered_instances(100);
    const auto s = split_chronological(instances, SplitFractions{});
    CHECK(s.train.size() == 70);
    CHECK(s.val.size() == 10);
    CHECK(s.test.size() == 20);
    CHECK(s.train.back().day < s.val.front().day);
    CHECK(s.val.back().day < s.test.front().day);

    const auto tiny = split_chronological(numbered_instances(10), SplitFractions{});
    CHECK(tiny.train.size() == 7);
    CHECK(tiny.val.size() == 1);
    CHECK(tiny.test.size() == 2);

    CHECK_THROWS_AS(split_chronological(numbered_instances(2), SplitFractions{}), FatalError);
}

TEST_CASE("splits partition the instances exactly") {
    const auto instances = numbered_instances(37);
    const auto s = split_chronological(instances, SplitFractions{});
    CHECK(s.train.size() + s.val.size() + s.test.size() == instances.size());
    std::size_t i = 0;
    for (const auto* block : {&s.train, &s.val, &s.test}) {
        for (const auto& inst : *block) {
            CHECK(inst.day == instances[i].day);
            ++i;
        }
    }
}

TEST_CASE("prepare_splits scales with the training scaler only") {
    const auto instances = numbered_instances(30);
    const auto s = split_chronological(instances, SplitFractions{});
    const auto splits = prepare_splits(s, nnet::Arch::kCnn);
    CHECK(splits.train.size() == s.train.size());
    CHECK(splits.test.size() == s.test.size());
    for (const auto& inst : splits.train) {
        CHECK(inst.steps.size() == 1);
        CHECK(inst.scaler_fingerprint == splits.scaler.fingerprint());
    }
    // LSTM windows drop the first two training instances only
    const auto lstm = prepare_splits(s, nnet::Arch::kCnnLstm);
    CHECK(lstm.train.size() == s.train.size() - 2);
    CHECK(lstm.val.size() == s.val.size());
    CHECK(lstm.test.size() == s.test.size());
    CHECK(lstm.test.front().steps.size() == 3);
}

TEST_CASE("fixture generation is byte-deterministic") {
    const std::string dir1 = std::filesystem::temp_directory_path() / "fintwit_fx1";
    const std::string dir2 = std::filesystem::temp_directory_path() / "fintwit_fx2";
    FixtureParams params;
    params.seed = 31;
    params.days = 30;
    const auto f1 = generate_fixture(params, dir1);
    const auto f2 = generate_fixture(params, dir2);
    CHECK(slurp(f1.tweets_path) == slurp(f2.tweets_path));
    CHECK(slurp(f1.bars_path) == slurp(f2.bars_path));
    CHECK(slurp(f1.manifest_path) == slurp(f2.manifest_path));
    std::filesystem::remove_all(dir1);
    std::filesystem::remove_all(dir2);
}

TEST_CASE("fixture planted fraction and label balance") {
    const std::string dir = std::filesystem::temp_directory_path() / "fintwit_fx3";
    FixtureParams params;
    params.seed = 5;
    params.days = 400;
    const auto files = generate_fixture(params, dir);

    const std::string manifest = slurp(files.manifest_path);
    // planted days around half of 400, well within binomial noise
    const auto planted_pos = manifest.find("\"planted_days\": ");
    REQUIRE(planted_pos != std::string::npos);
    const int planted = std::atoi(manifest.c_str() + planted_pos + 16);
    CHECK(planted > 160);
    CHECK(planted < 240);
    const auto up_pos = manifest.find("\"up_days\": ");
    REQUIRE(up_pos != std::string::npos);
    const int up = std::atoi(manifest.c_str() + up_pos + 11);
    CHECK(up > 160);
    CHECK(up < 240);

    // generated bars load cleanly and respect OHLC sanity
    const auto bars = ingest::load_bars(files.bars_path, params.ticker);
    CHECK(bars.size() == 400);
    std::filesystem::remove_all(dir);
}

TEST_CASE("fixture bayes accuracy closed form") {
    FixtureParams params;  // 0.5 planted, up 0.9 / 0.1
    CHECK(fixture_bayes_accuracy(params) == doctest::Approx(0.9));
    params.p_up_unplanted = 0.5;
    CHECK(fixture_bayes_accuracy(params) == doctest::Approx(0.7));  // coin on half the days
}

TEST_CASE("fixture days below ten are rejected") {
    FixtureParams params;
    params.days = 5;
    CHECK_THROWS_AS(generate_fixture(params, "/tmp/fintwit_fx_bad"), FatalError);
}

TEST_CASE("repeat seeds differ across cells and repeats") {
    ExperimentConfig config;
    const auto a = repeat_seed(config, "AAPL", feat::FeatureSet::kProposed, nnet::Arch::kCnn, 0);
    const auto b = repeat_seed(config, "AAPL", feat::FeatureSet::kProposed, nnet::Arch::kCnn, 1);
    const auto c = repeat_seed(config, "TSLA", feat::FeatureSet::kProposed, nnet::Arch::kCnn, 0);
    const auto d =
        repeat_seed(config, "AAPL", feat::FeatureSet::kPriceOnly, nnet::Arch::kCnn, 0);
    CHECK(a != b);
    CHECK(a != c);
    CHECK(a != d);
}

namespace {

RunReport stub_report(const ExperimentConfig& config) {
    RunReport report;
    for (const auto& t : config.tickers) {
        for (auto fs : config.feature_sets) {
            for (auto arch : config.archs) {
                CellResult cell;
                cell.ticker = t.symbol;
                cell.feature_set = fs;
                cell.arch = arch;
                cell.train_acc = {60.0, 62.0};
                cell.val_acc = {55.0, 57.0};
                cell.test_acc = {58.0, 60.0};
                cell.mean_train_acc = 61.0;
                cell.mean_val_acc = 56.0;
                cell.mean_test_acc = 59.0;
                cell.best_repeat = 1;
                report.cells.push_back(cell);
            }
        }
    }
    TickerExplanation te;
    te.ticker = config.tickers.front().symbol;
    Rng rng(17);
    for (int i = 0; i < 5; ++i) {
        explain::Attribution a;
        a.day = add_days(Date{2019, 10, 1}, i);
        a.cell_weights = feat::MatrixXd::Zero(12, 16);
        for (int r = 0; r < 12; ++r) {
            for (int c = 0; c < 16; ++c) a.cell_weights(r, c) = rng.uniform(-0.1, 0.1);
        }
        a.predicted = 1;
        a.correct = i != 2;
        te.attributions.push_back(a);
    }
    std::vector<std::string> names(feat::proposed_column_names().begin(),
                                   feat::proposed_column_names().end());
    te.feature_table = explain::aggregate(te.attributions, explain::Axis::kFeature, names);
    te.time_table = explain::aggregate(te.attributions, explain::Axis::kTime, names);
    te.series = explain::instance_series(te.attributions);
    report.explanations.push_back(std::move(te));
    return report;
}

}  // namespace

TEST_CASE("emitted reports have the documented shapes") {
    ExperimentConfig config;
    config.tickers = {{"SYNTH", "", ""}};
    const RunReport report = stub_report(config);
    const std::string dir = std::filesystem::temp_directory_path() / "fintwit_reports";
    emit_reports(report, config, dir);

    // accuracy table: header + 3 sections x 9 feature rows
    const std::string acc = slurp(dir + "/accuracy_table.csv");
    CHECK(count_lines(acc) == 1 + 3 * 9);
    CHECK(count_occurrences(acc, "DOC2VEC") == 9);  // 3 rows per section, all n/a
    CHECK(acc.find("SYNTH:cnn,SYNTH:cnn_lstm") != std::string::npos);

    // feature importance: header + 16 rows
    const std::string fi = slurp(dir + "/feature_importance.csv");
    CHECK(count_lines(fi) == 17);
    CHECK(fi.find("tweet_volume") != std::string::npos);

    // time importance: header + 12 rows in fixed order with market annotations
    const std::string ti = slurp(dir + "/time_importance.csv");
    CHECK(count_lines(ti) == 13);
    CHECK(ti.find("16-18 (Market Closed)") != std::string::npos);
    CHECK(ti.find("14-16 (Market Open)") != std::string::npos);
    const auto pos_2022 = ti.find("20-22");
    const auto pos_810 = ti.find("8-10 (Market Open)");
    CHECK(pos_2022 < pos_810);

    // series: one row per correct prediction; svg has one polyline per feature
    const std::string series = slurp(dir + "/instance_series_SYNTH.csv");
    CHECK(count_lines(series) == 1 + 4);
    const std::string svg = slurp(dir + "/instance_series_SYNTH.svg");
    CHECK(count_occurrences(svg, "<polyline") == 16);

    // report means are reproducible from the stored per-repeat values
    const std::string rr = slurp(dir + "/run_report.json");
    CHECK(rr.find("\"mean_test_acc\": 59.0") != std::string::npos);
    CHECK(rr.find("\"test_acc\": [") != std::string::npos);

    std::filesystem::remove_all(dir);
}

TEST_CASE("experiment config loads from JSON with env overrides") {
    const std::string dir = std::filesystem::temp_directory_path() / "fintwit_cfg";
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/config.json";
    {
        std::ofstream out(path);
        out << R"({
  "tickers": ["AAPL", "TSLA"],
  "tweets": "data/{ticker}_tweets.csv",
  "bars": "data/{ticker}_bars.csv",
  "window": {"start": "2018-06-01", "end": "2019-12-31"},
  "timezone": "US/Eastern",
  "engagement_threshold": 40,
  "repeats": 3,
  "seed": 1234,
  "split": {"train": 0.7, "val": 0.1, "test": 0.2},
  "feature_sets": ["proposed", "price_only"],
  "archs": ["cnn"],
  "nnet": {"epochs": 50, "l2_grid": [0, 0.001], "grid_repeats": 1},
  "explain": {"enabled": true, "n_samples": 2000}
})";
    }
    const auto config = load_experiment_config(path);
    CHECK(config.tickers.size() == 2);
    CHECK(config.tickers[0].tweets_path == "data/AAPL_tweets.csv");
    CHECK(config.tickers[1].bars_path == "data/TSLA_bars.csv");
    CHECK(config.repeats == 3);
    CHECK(config.base_seed == 1234);
    CHECK(config.epochs == 50);
    CHECK(config.l2_grid.size() == 2);
    CHECK(config.feature_sets.size() == 2);
    CHECK(config.archs.size() == 1);
    CHECK(config.window_start == Date{2018, 6, 1});

    setenv("FINTWIT_TWEETS", "/override/{ticker}.csv", 1);
    const auto overridden = load_experiment_config(path);
    unsetenv("FINTWIT_TWEETS");
    CHECK(overridden.tickers[0].tweets_path == "/override/AAPL.csv");

    // bad split fractions are fatal
    {
        std::ofstream out(path);
        out << R"({"tickers": ["A"], "split": {"train": 0.9, "val": 0.3, "test": 0.2}})";
    }
    CHECK_THROWS_AS(load_experiment_config(path), FatalError);
    std::filesystem::remove_all(dir);
}
