#include "fintwit/harness.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fintwit/common.hpp"
#include "fintwit/textprep.hpp"

namespace fintwit::harness {

namespace {

std::string apply_ticker(std::string pattern, const std::string& symbol) {
    const std::string placeholder = "{ticker}";
    const auto pos = pattern.find(placeholder);
    if (pos != std::string::npos) pattern.replace(pos, placeholder.size(), symbol);
    return pattern;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot open config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FatalError("config parse error in " + path + ": " + e.what());
    }

    ExperimentConfig c;
    std::string tweets_pattern = j.value("tweets", std::string());
    std::string bars_pattern = j.value("bars", std::string());
    if (const char* env = std::getenv("FINTWIT_TWEETS"); env && *env) tweets_pattern = env;
    if (const char* env = std::getenv("FINTWIT_BARS"); env && *env) bars_pattern = env;
    std::string root;
    if (const char* env = std::getenv("FINTWIT_DATA_ROOT"); env && *env) root = env;
    else root = j.value("data_root", std::string());
    auto resolve = [&](const std::string& p) {
        if (root.empty() || p.empty() || p.front() == '/') return p;
        return root + "/" + p;
    };

    for (const auto& t : j.at("tickers")) {
        TickerSpec spec;
        if (t.is_string()) {
            spec.symbol = t.get<std::string>();
            spec.tweets_path = resolve(apply_ticker(tweets_pattern, spec.symbol));
            spec.bars_path = resolve(apply_ticker(bars_pattern, spec.symbol));
        } else {
            spec.symbol = t.at("symbol").get<std::string>();
            spec.tweets_path =
                resolve(t.value("tweets", apply_ticker(tweets_pattern, spec.symbol)));
            spec.bars_path = resolve(t.value("bars", apply_ticker(bars_pattern, spec.symbol)));
        }
        c.tickers.push_back(std::move(spec));
    }

    if (j.contains("window")) {
        const auto& w = j.at("window");
        if (auto d = parse_date(w.value("start", c.window_start.to_string()))) c.window_start = *d;
        if (auto d = parse_date(w.value("end", c.window_end.to_string()))) c.window_end = *d;
    }
    c.timezone = j.value("timezone", c.timezone);
    c.engagement_threshold = j.value("engagement_threshold", c.engagement_threshold);
    if (j.value("window_end_policy", "target_close") == std::string("prior_close")) {
        c.window_end_policy = feat::WindowEnd::kPriorClose;
    }
    c.pos_threshold = j.value("pos_threshold", c.pos_threshold);
    c.neg_threshold = j.value("neg_threshold", c.neg_threshold);
    c.bow_seed = j.value("bow_seed", c.bow_seed);

    if (j.contains("feature_sets")) {
        c.feature_sets.clear();
        for (const auto& fs : j.at("feature_sets")) {
            c.feature_sets.push_back(feat::feature_set_from_name(fs.get<std::string>()));
        }
    }
    if (j.contains("archs")) {
        c.archs.clear();
        for (const auto& a : j.at("archs")) {
            c.archs.push_back(nnet::arch_from_name(a.get<std::string>()));
        }
    }

    c.repeats = j.value("repeats", c.repeats);
    if (j.contains("split")) {
        const auto& s = j.at("split");
        c.split.train = s.value("train", c.split.train);
        c.split.val = s.value("val", c.split.val);
        c.split.test = s.value("test", c.split.test);
    }
    const double frac_sum = c.split.train + c.split.val + c.split.test;
    if (std::abs(frac_sum - 1.0) > 1e-9) {
        throw FatalError("split fractions must sum to 1");
    }
    if (c.repeats < 1) throw FatalError("repeats must be >= 1");
    c.base_seed = j.value("seed", c.base_seed);

    if (j.contains("nnet")) {
        const auto& n = j.at("nnet");
        c.epochs = n.value("epochs", c.epochs);
        c.batch_size = n.value("batch_size", c.batch_size);
        c.learning_rate = n.value("learning_rate", c.learning_rate);
        c.dense_hidden = n.value("dense_hidden", c.dense_hidden);
        c.lstm_hidden = n.value("lstm_hidden", c.lstm_hidden);
        if (n.contains("l2_grid")) c.l2_grid = n.at("l2_grid").get<std::vector<double>>();
        c.grid_repeats = n.value("grid_repeats", c.grid_repeats);
    }
    if (j.contains("explain")) {
        const auto& e = j.at("explain");
        c.explain_enabled = e.value("enabled", c.explain_enabled);
        c.explain_all_cells = e.value("all_cells", c.explain_all_cells);
        c.explain_samples = e.value("n_samples", c.explain_samples);
        c.explain_kernel_width = e.value("kernel_width", c.explain_kernel_width);
        c.explain_ridge = e.value("ridge", c.explain_ridge);
    }
    return c;
}

SplitResult split_chronological(const std::vector<feat::LabeledInstance>& instances,
                                const SplitFractions& fractions) {
    const std::size_t n = instances.size();
    const auto n_train = static_cast<std::size_t>(fractions.train * static_cast<double>(n));
    const auto n_val = static_cast<std::size_t>(fractions.val * static_cast<double>(n));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
        throw FatalError("split leaves an empty block (" + std::to_string(n) + " instances)");
    }
    SplitResult out;
    out.train.assign(instances.begin(), instances.begin() + n_train);
    out.val.assign(instances.begin() + n_train, instances.begin() + n_train + n_val);
    out.test.assign(instances.begin() + n_train + n_val, instances.end());
    return out;
}

namespace {

// LSTM windows need the two preceding matrices; the first usable index in a
// contiguous block starts where history exists within the full sequence.
std::vector<nnet::ScaledInstance> scale_block(
    const std::vector<feat::LabeledInstance>& all, std::size_t begin, std::size_t end,
    const feat::Scaler& scaler, nnet::Arch arch) {
    const int steps = arch == nnet::Arch::kCnnLstm ? nnet::kLstmSteps : 1;
    std::vector<nnet::ScaledInstance> out;
    for (std::size_t i = begin; i < end; ++i) {
        if (i + 1 < static_cast<std::size_t>(steps)) continue;  // not enough history
        nnet::ScaledInstance inst;
        for (int t = steps - 1; t >= 0; --t) {  // oldest first
            inst.steps.push_back(scaler.apply(all[i - t].x.values));
        }
        inst.label = all[i].label;
        inst.day = all[i].day;
        inst.scaler_fingerprint = scaler.fingerprint();
        out.push_back(std::move(inst));
    }
    return out;
}

}  // namespace

nnet::DataSplits prepare_splits(const SplitResult& split, nnet::Arch arch) {
    return prepare_splits(split, arch, feat::Scaler::fit(split.train));
}

nnet::DataSplits prepare_splits(const SplitResult& split, nnet::Arch arch,
                                const feat::Scaler& scaler) {
    nnet::DataSplits out;
    out.scaler = scaler;

    std::vector<feat::LabeledInstance> all;
    all.reserve(split.train.size() + split.val.size() + split.test.size());
    all.insert(all.end(), split.train.begin(), split.train.end());
    all.insert(all.end(), split.val.begin(), split.val.end());
    all.insert(all.end(), split.test.begin(), split.test.end());

    const std::size_t t0 = 0, t1 = split.train.size();
    const std::size_t v1 = t1 + split.val.size();
    out.train = scale_block(all, t0, t1, out.scaler, arch);
    out.val = scale_block(all, t1, v1, out.scaler, arch);
    out.test = scale_block(all, v1, all.size(), out.scaler, arch);
    if (out.train.empty() || out.val.empty() || out.test.empty()) {
        throw FatalError("a split is empty after timestep windowing");
    }
    return out;
}

std::uint64_t repeat_seed(const ExperimentConfig& config, const std::string& ticker,
                          feat::FeatureSet fs, nnet::Arch arch, int repeat) {
    const std::string tag = ticker + "/" + feat::feature_set_name(fs) + "/" + arch_name(arch);
    return derive_seed(config.base_seed, fnv1a(tag) + static_cast<std::uint64_t>(repeat));
}

namespace {

int input_cols_for(feat::FeatureSet fs) {
    switch (fs) {
        case feat::FeatureSet::kProposed: return 16;
        case feat::FeatureSet::kBow8: return 16;
        case feat::FeatureSet::kBow16: return 24;
        case feat::FeatureSet::kBow24: return 32;
        case feat::FeatureSet::kSentimentPrice: return 11;
        case feat::FeatureSet::kPriceOnly: return 8;
    }
    throw FatalError("unknown feature set");
}

nnet::ModelConfig cell_model_config(const ExperimentConfig& config, feat::FeatureSet fs,
                                    nnet::Arch arch) {
    nnet::ModelConfig mc;
    mc.arch = arch;
    mc.rows = feat::kRows;
    mc.cols = input_cols_for(fs);
    mc.conv_blocks = nnet::ModelConfig::auto_conv_blocks(mc.rows, mc.cols);
    mc.dense_hidden = config.dense_hidden;
    mc.lstm_hidden = config.lstm_hidden;
    mc.learning_rate = config.learning_rate;
    mc.epochs = config.epochs;
    mc.batch_size = config.batch_size;
    return mc;
}

struct TickerData {
    std::map<feat::FeatureSet, std::vector<feat::LabeledInstance>> instances;
};

TickerData load_ticker_data(const ExperimentConfig& config, const TickerSpec& spec) {
    auto loaded = ingest::load_tweets(spec.tweets_path, spec.symbol);
    auto bars = ingest::load_bars(spec.bars_path, spec.symbol);
    const Timezone tz = Timezone::parse(config.timezone);
    auto corpus = ingest::window(std::move(loaded.tweets), std::move(bars), config.window_start,
                                 config.window_end, tz);
    corpus.tweets = ingest::filter_engagement(corpus.tweets, config.engagement_threshold);

    const auto stopwords = textprep::default_stopwords();
    TickerData data;
    for (feat::FeatureSet fs : config.feature_sets) {
        feat::DatasetOptions opts;
        opts.feature_set = fs;
        opts.window_end = config.window_end_policy;
        opts.timezone = config.timezone;
        opts.bow_seed = config.bow_seed;
        opts.signals.pos_threshold = config.pos_threshold;
        opts.signals.neg_threshold = config.neg_threshold;
        data.instances[fs] = feat::build_dataset(corpus, stopwords, opts);
    }
    return data;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& config) {
    RunReport report;
    for (const auto& spec : config.tickers) {
        TickerData data;
        bool ticker_loaded = true;
        std::string load_error;
        try {
            data = load_ticker_data(config, spec);
        } catch (const std::exception& e) {
            ticker_loaded = false;
            load_error = e.what();
        }

        std::optional<TickerExplanation> pending_explanation;
        for (feat::FeatureSet fs : config.feature_sets) {
            for (nnet::Arch arch : config.archs) {
                CellResult cell;
                cell.ticker = spec.symbol;
                cell.feature_set = fs;
                cell.arch = arch;
                if (!ticker_loaded) {
                    cell.failed = true;
                    cell.error = load_error;
                    report.any_failed = true;
                    report.cells.push_back(std::move(cell));
                    continue;
                }
                try {
                    const auto& instances = data.instances.at(fs);
                    const SplitResult split = split_chronological(instances, config.split);
                    const nnet::DataSplits splits = prepare_splits(split, arch);

                    nnet::ModelConfig mc = cell_model_config(config, fs, arch);
                    const auto grid = nnet::grid_search(
                        splits, mc, config.l2_grid, config.grid_repeats,
                        repeat_seed(config, spec.symbol, fs, arch, 0));
                    cell.chosen_l2 = grid.best_l2;
                    cell.grid_log = grid.candidate_mean_val_acc;
                    for (const auto& [l2, acc] : grid.candidate_mean_val_acc) {
                        info("grid " + spec.symbol + "/" + feat::feature_set_name(fs) + "/" +
                             nnet::arch_name(arch) + ": l2=" + std::to_string(l2) +
                             " mean val acc=" + std::to_string(acc * 100.0));
                    }
                    mc.l2 = grid.best_l2;

                    std::optional<nnet::TrainedModel> best_model;
                    double best_test = -1.0;
                    for (int r = 0; r < config.repeats; ++r) {
                        mc.seed = repeat_seed(config, spec.symbol, fs, arch, r);
                        const nnet::TrainedModel model = nnet::train(splits, mc);
                        const double tr = nnet::accuracy(model, splits.train) * 100.0;
                        const double va = nnet::accuracy(model, splits.val) * 100.0;
                        const double te = nnet::accuracy(model, splits.test) * 100.0;
                        cell.train_acc.push_back(tr);
                        cell.val_acc.push_back(va);
                        cell.test_acc.push_back(te);
                        if (te > best_test) {
                            best_test = te;
                            cell.best_repeat = r;
                            best_model = model;
                        }
                    }
                    auto mean = [](const std::vector<double>& v) {
                        double s = 0;
                        for (double x : v) s += x;
                        return s / static_cast<double>(v.size());
                    };
                    cell.mean_train_acc = mean(cell.train_acc);
                    cell.mean_val_acc = mean(cell.val_acc);
                    cell.mean_test_acc = mean(cell.test_acc);

                    const bool explain_this_cell =
                        config.explain_enabled &&
                        (config.explain_all_cells ||
                         (fs == feat::FeatureSet::kProposed && arch == nnet::Arch::kCnn));
                    if (explain_this_cell && best_model) {
                        TickerExplanation te_result;
                        te_result.ticker = spec.symbol;

                        Eigen::MatrixXd baseline =
                            Eigen::MatrixXd::Zero(feat::kRows, input_cols_for(fs));
                        for (const auto& inst : splits.train) baseline += inst.steps.back();
                        baseline /= static_cast<double>(splits.train.size());

                        explain::Settings settings;
                        settings.n_samples = config.explain_samples;
                        settings.kernel_width = config.explain_kernel_width;
                        settings.ridge = config.explain_ridge;
                        settings.base_seed = config.base_seed;
                        for (const auto& inst : splits.test) {
                            te_result.attributions.push_back(
                                explain::explain_instance(*best_model, inst, baseline, settings));
                        }
                        const auto& names = split.test.front().x.column_names;
                        te_result.feature_table = explain::aggregate(
                            te_result.attributions, explain::Axis::kFeature, names);
                        te_result.time_table = explain::aggregate(
                            te_result.attributions, explain::Axis::kTime, names);
                        te_result.series = explain::instance_series(te_result.attributions);
                        pending_explanation = std::move(te_result);
                    }
                } catch (const std::exception& e) {
                    cell.failed = true;
                    cell.error = e.what();
                    report.any_failed = true;
                }
                report.cells.push_back(std::move(cell));
            }
        }
        if (pending_explanation) report.explanations.push_back(std::move(*pending_explanation));
    }
    return report;
}

}  // namespace fintwit::harness
