// fintwit: build Twitter-plus-price feature matrices, train the CNN /
// CNN-LSTM classifiers, and attribute predictions with the local surrogate
// explainer.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include <CLI11.hpp>

#include "fintwit/common.hpp"
#include "fintwit/explain.hpp"
#include "fintwit/harness.hpp"
#include "fintwit/textprep.hpp"

namespace {

using namespace fintwit;

struct CellArgs {
    std::string ticker;
    std::string feature_set = "proposed";
    std::string arch = "cnn";
};

harness::ExperimentConfig load_config_or_default(const std::string& path,
                                                 std::optional<std::uint64_t> seed) {
    harness::ExperimentConfig config = harness::load_experiment_config(path);
    if (seed) config.base_seed = *seed;
    return config;
}

const harness::TickerSpec& find_ticker(const harness::ExperimentConfig& config,
                                       const std::string& symbol) {
    for (const auto& t : config.tickers) {
        if (symbol.empty() || t.symbol == symbol) return t;
    }
    throw FatalError("ticker not found in config: " + symbol);
}

std::vector<feat::LabeledInstance> build_cell_instances(
    const harness::ExperimentConfig& config, const harness::TickerSpec& spec,
    feat::FeatureSet fs) {
    auto loaded = ingest::load_tweets(spec.tweets_path, spec.symbol);
    auto bars = ingest::load_bars(spec.bars_path, spec.symbol);
    const Timezone tz = Timezone::parse(config.timezone);
    auto corpus = ingest::window(std::move(loaded.tweets), std::move(bars), config.window_start,
                                 config.window_end, tz);
    corpus.tweets = ingest::filter_engagement(corpus.tweets, config.engagement_threshold);
    feat::DatasetOptions opts;
    opts.feature_set = fs;
    opts.window_end = config.window_end_policy;
    opts.timezone = config.timezone;
    opts.bow_seed = config.bow_seed;
    opts.signals.pos_threshold = config.pos_threshold;
    opts.signals.neg_threshold = config.neg_threshold;
    return feat::build_dataset(corpus, textprep::default_stopwords(), opts);
}

nnet::ModelConfig cell_config(const harness::ExperimentConfig& config, feat::FeatureSet fs,
                              nnet::Arch arch, int input_cols) {
    nnet::ModelConfig mc;
    mc.arch = arch;
    mc.rows = feat::kRows;
    mc.cols = input_cols;
    mc.conv_blocks = nnet::ModelConfig::auto_conv_blocks(mc.rows, mc.cols);
    mc.dense_hidden = config.dense_hidden;
    mc.lstm_hidden = config.lstm_hidden;
    mc.learning_rate = config.learning_rate;
    mc.epochs = config.epochs;
    mc.batch_size = config.batch_size;
    mc.seed = harness::repeat_seed(config, "", fs, arch, 0);
    return mc;
}

int cmd_fixture(const std::string& out, std::uint64_t seed, int days) {
    harness::FixtureParams params;
    params.seed = seed;
    params.days = days;
    const auto files = harness::generate_fixture(params, out);
    std::printf("wrote %s\nwrote %s\nwrote %s\n", files.tweets_path.c_str(),
                files.bars_path.c_str(), files.manifest_path.c_str());
    return 0;
}

int cmd_build_features(const std::string& config_path, std::optional<std::uint64_t> seed,
                       const std::string& out, const std::string& feature_set) {
    const auto config = load_config_or_default(config_path, seed);
    std::filesystem::create_directories(out);
    const auto fs = feat::feature_set_from_name(feature_set);
    for (const auto& spec : config.tickers) {
        auto loaded = ingest::load_tweets(spec.tweets_path, spec.symbol);
        if (!loaded.rejects.empty()) {
            std::ofstream rej(out + "/rejects_" + spec.symbol + ".txt");
            for (const auto& r : loaded.rejects) {
                rej << "line " << r.line << ": " << r.reason << '\n';
            }
        }
        auto bars = ingest::load_bars(spec.bars_path, spec.symbol);
        const Timezone tz = Timezone::parse(config.timezone);
        auto corpus = ingest::window(std::move(loaded.tweets), std::move(bars),
                                     config.window_start, config.window_end, tz);
        corpus.tweets = ingest::filter_engagement(corpus.tweets, config.engagement_threshold);
        feat::DatasetOptions opts;
        opts.feature_set = fs;
        opts.window_end = config.window_end_policy;
        opts.timezone = config.timezone;
        opts.bow_seed = config.bow_seed;
        opts.signals.pos_threshold = config.pos_threshold;
        opts.signals.neg_threshold = config.neg_threshold;
        const auto instances =
            feat::build_dataset(corpus, textprep::default_stopwords(), opts);
        const std::string path = out + "/features_" + spec.symbol + ".jsonl";
        feat::write_instances_jsonl(instances, path);
        std::printf("%s: %zu instances -> %s (%zu rejects)\n", spec.symbol.c_str(),
                    instances.size(), path.c_str(), loaded.rejects.size());
    }
    return 0;
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& out, const CellArgs& cell) {
    const auto config = load_config_or_default(config_path, seed);
    const auto& spec = find_ticker(config, cell.ticker);
    const auto fs = feat::feature_set_from_name(cell.feature_set);
    const auto arch = nnet::arch_from_name(cell.arch);

    const auto instances = build_cell_instances(config, spec, fs);
    const auto split = harness::split_chronological(instances, config.split);
    const auto splits = harness::prepare_splits(split, arch);

    nnet::ModelConfig mc =
        cell_config(config, fs, arch, static_cast<int>(instances.front().x.values.cols()));
    const auto grid =
        nnet::grid_search(splits, mc, config.l2_grid, config.grid_repeats,
                          harness::repeat_seed(config, spec.symbol, fs, arch, 0));
    mc.l2 = grid.best_l2;
    mc.seed = harness::repeat_seed(config, spec.symbol, fs, arch, 0);
    const auto model = nnet::train(splits, mc);

    std::filesystem::create_directories(out);
    const std::string path = out + "/model_" + spec.symbol + "_" + cell.feature_set + "_" +
                             cell.arch + ".json";
    nnet::save_model(model, path);
    std::printf("chosen l2 %g; train %.2f%% val %.2f%% test %.2f%% -> %s\n", grid.best_l2,
                nnet::accuracy(model, splits.train) * 100.0,
                nnet::accuracy(model, splits.val) * 100.0,
                nnet::accuracy(model, splits.test) * 100.0, path.c_str());
    return 0;
}

int cmd_evaluate(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& model_path, const CellArgs& cell) {
    const auto config = load_config_or_default(config_path, seed);
    const auto& spec = find_ticker(config, cell.ticker);
    const auto fs = feat::feature_set_from_name(cell.feature_set);
    const auto model = nnet::load_model(model_path);

    const auto instances = build_cell_instances(config, spec, fs);
    const auto split = harness::split_chronological(instances, config.split);
    // Evaluation must use the scaler persisted with the model.
    const auto splits = harness::prepare_splits(split, model.config.arch, model.scaler);
    std::printf("train %.3f%% val %.3f%% test %.3f%%\n",
                nnet::accuracy(model, splits.train) * 100.0,
                nnet::accuracy(model, splits.val) * 100.0,
                nnet::accuracy(model, splits.test) * 100.0);
    return 0;
}

int cmd_explain(const std::string& config_path, std::optional<std::uint64_t> seed,
                const std::string& model_path, const std::string& out, const CellArgs& cell) {
    const auto config = load_config_or_default(config_path, seed);
    const auto& spec = find_ticker(config, cell.ticker);
    const auto fs = feat::feature_set_from_name(cell.feature_set);
    const auto model = nnet::load_model(model_path);

    const auto instances = build_cell_instances(config, spec, fs);
    const auto split = harness::split_chronological(instances, config.split);
    const auto splits = harness::prepare_splits(split, model.config.arch, model.scaler);

    Eigen::MatrixXd baseline =
        Eigen::MatrixXd::Zero(model.config.rows, model.config.cols);
    for (const auto& inst : splits.train) baseline += inst.steps.back();
    baseline /= static_cast<double>(splits.train.size());

    explain::Settings settings;
    settings.n_samples = config.explain_samples;
    settings.kernel_width = config.explain_kernel_width;
    settings.ridge = config.explain_ridge;
    settings.base_seed = config.base_seed;

    std::vector<explain::Attribution> attributions;
    for (const auto& inst : splits.test) {
        attributions.push_back(explain::explain_instance(model, inst, baseline, settings));
    }
    std::filesystem::create_directories(out);
    explain::write_attributions_jsonl(attributions,
                                      out + "/attributions_" + spec.symbol + ".jsonl");

    const auto& names = split.test.front().x.column_names;
    harness::RunReport report;
    harness::TickerExplanation te;
    te.ticker = spec.symbol;
    te.attributions = attributions;
    te.feature_table = explain::aggregate(attributions, explain::Axis::kFeature, names);
    te.time_table = explain::aggregate(attributions, explain::Axis::kTime, names);
    te.series = explain::instance_series(attributions);
    report.explanations.push_back(std::move(te));
    harness::emit_reports(report, config, out);
    std::printf("explained %zu test instances -> %s\n", attributions.size(), out.c_str());
    return 0;
}

int cmd_report(const std::string& config_path, std::optional<std::uint64_t> seed,
               const std::string& out) {
    const auto config = load_config_or_default(config_path, seed);
    const auto report = harness::run_experiment(config);
    harness::emit_reports(report, config, out);
    std::size_t failed = 0;
    for (const auto& c : report.cells) {
        if (c.failed) ++failed;
    }
    std::printf("%zu cells, %zu failed -> %s\n", report.cells.size(), failed, out.c_str());
    return report.any_failed ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Twitter + price feature matrices, CNN direction classifiers, and "
                 "local-surrogate attributions"};
    app.require_subcommand(1);

    std::string config_path, out = "out", model_path;
    std::optional<std::uint64_t> seed;
    CellArgs cell;
    std::uint64_t fixture_seed = 7;
    int fixture_days = 400;
    std::string feature_set = "proposed";

    auto* fixture = app.add_subcommand("fixture", "generate a synthetic planted-signal corpus");
    fixture->add_option("--out", out, "output directory");
    fixture->add_option("--seed", fixture_seed, "generator seed");
    fixture->add_option("--days", fixture_days, "number of trading days");

    auto* build = app.add_subcommand("build-features", "build per-day feature matrices");
    build->add_option("--config", config_path, "experiment config JSON")->required();
    build->add_option("--seed", seed, "override base seed");
    build->add_option("--out", out, "output directory");
    build->add_option("--feature-set", feature_set, "proposed|bow8|bow16|bow24|sentiment_price|price_only");

    auto* train = app.add_subcommand("train", "grid-search and train one model");
    train->add_option("--config", config_path)->required();
    train->add_option("--seed", seed);
    train->add_option("--out", out);
    train->add_option("--ticker", cell.ticker);
    train->add_option("--feature-set", cell.feature_set);
    train->add_option("--arch", cell.arch);

    auto* evaluate = app.add_subcommand("evaluate", "report split accuracies of a checkpoint");
    evaluate->add_option("--config", config_path)->required();
    evaluate->add_option("--seed", seed);
    evaluate->add_option("--model", model_path)->required();
    evaluate->add_option("--ticker", cell.ticker);
    evaluate->add_option("--feature-set", cell.feature_set);

    auto* explain_cmd = app.add_subcommand("explain", "attribute a checkpoint's test predictions");
    explain_cmd->add_option("--config", config_path)->required();
    explain_cmd->add_option("--seed", seed);
    explain_cmd->add_option("--model", model_path)->required();
    explain_cmd->add_option("--out", out);
    explain_cmd->add_option("--ticker", cell.ticker);
    explain_cmd->add_option("--feature-set", cell.feature_set);

    auto* report = app.add_subcommand("report", "run the full experiment grid and emit reports");
    report->add_option("--config", config_path)->required();
    report->add_option("--seed", seed);
    report->add_option("--out", out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (fixture->parsed()) return cmd_fixture(out, fixture_seed, fixture_days);
        if (build->parsed()) return cmd_build_features(config_path, seed, out, feature_set);
        if (train->parsed()) return cmd_train(config_path, seed, out, cell);
        if (evaluate->parsed()) return cmd_evaluate(config_path, seed, model_path, cell);
        if (explain_cmd->parsed()) return cmd_explain(config_path, seed, model_path, out, cell);
        if (report->parsed()) return cmd_report(config_path, seed, out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "fatal: %s\n", e.what());
        return 1;
    }
    return 0;
}
