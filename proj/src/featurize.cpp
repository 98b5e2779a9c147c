#include "fintwit/featurize.hpp"

#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "fintwit/common.hpp"

namespace fintwit::feat {

const std::array<std::string, kRows>& row_times() {
    static const std::array<std::string, kRows> labels = {
        "16-18", "18-20", "20-22", "22-24", "0-2",   "2-4",
        "4-6",   "6-8",   "8-10",  "10-12", "12-14", "14-16"};
    return labels;
}

const std::array<std::string, kProposedCols>& proposed_column_names() {
    static const std::array<std::string, kProposedCols> names = {
        "writer_score", "n_comments", "n_likes", "n_retweets", "afinn", "vader",
        "polarity_sum", "tweet_volume", "open",  "high",       "low",   "close",
        "trade_volume", "lag1",       "lag2",    "lag3"};
    return names;
}

int bucket_index_for_hour(int local_hour) { return ((local_hour + 24 - 16) % 24) / 2; }

std::int64_t WriterScoreLedger::writer_score(const ingest::Tweet& tweet) {
    if (tweet.timestamp < frontier_) {
        throw FatalError("writer-score ledger fed out of order: tweet at " +
                         format_timestamp_utc(tweet.timestamp) + " is before frontier " +
                         format_timestamp_utc(frontier_));
    }
    if (tweet.timestamp > frontier_) {
        commit_pending();
        frontier_ = tweet.timestamp;
    }
    std::int64_t score = 0;
    if (auto it = committed_.find(tweet.author_id); it != committed_.end()) score = it->second;
    pending_.emplace_back(tweet.author_id, total_engagement(tweet));
    return score;
}

void WriterScoreLedger::commit_pending() {
    for (const auto& [author, te] : pending_) committed_[author] += te;
    pending_.clear();
}

std::vector<TweetSignal> compute_signals(const std::vector<ingest::Tweet>& tweets,
                                         const textprep::StopwordSet& stopwords,
                                         const SignalOptions& options) {
    WriterScoreLedger ledger;
    std::vector<TweetSignal> signals;
    signals.reserve(tweets.size());
    for (const auto& tweet : tweets) {
        TweetSignal s;
        s.timestamp = tweet.timestamp;
        s.writer_score = ledger.writer_score(tweet);
        s.comments = tweet.comments;
        s.likes = tweet.likes;
        s.retweets = tweet.retweets;
        auto normalized = textprep::normalize(tweet.text, stopwords);
        s.scores.afinn = sentiment::afinn_score(normalized.unstemmed, sentiment::default_afinn());
        s.scores.vader = sentiment::vader_score(tweet.text);
        s.scores.polarity =
            sentiment::polarity(s.scores.vader, options.pos_threshold, options.neg_threshold);
        s.tokens = std::move(normalized.tokens);
        signals.push_back(std::move(s));
    }
    return signals;
}

std::array<std::vector<std::size_t>, kRows> bucket(const std::vector<TweetSignal>& signals,
                                                   EpochSeconds win_start, EpochSeconds win_end,
                                                   const Timezone& tz) {
    std::array<std::vector<std::size_t>, kRows> buckets;
    for (std::size_t i = 0; i < signals.size(); ++i) {
        const EpochSeconds ts = signals[i].timestamp;
        if (ts < win_start || ts >= win_end) continue;
        buckets[bucket_index_for_hour(tz.to_local(ts).hour)].push_back(i);
    }
    return buckets;
}

MatrixXd twitter_matrix(const std::array<std::vector<std::size_t>, kRows>& buckets,
                        const std::vector<TweetSignal>& signals) {
    MatrixXd m = MatrixXd::Zero(kRows, kTwitterCols);
    for (int r = 0; r < kRows; ++r) {
        for (std::size_t idx : buckets[r]) {
            const TweetSignal& s = signals[idx];
            m(r, 0) += static_cast<double>(s.writer_score);
            m(r, 1) += static_cast<double>(s.comments);
            m(r, 2) += static_cast<double>(s.likes);
            m(r, 3) += static_cast<double>(s.retweets);
            m(r, 4) += static_cast<double>(s.scores.afinn);
            m(r, 5) += s.scores.vader;
            m(r, 6) += static_cast<double>(s.scores.polarity);
            m(r, 7) += 1.0;
        }
    }
    return m;
}

int label(const ingest::PriceBar& bar) { return bar.close > bar.open ? 1 : 0; }

MatrixXd price_matrix(const ingest::PriceBar& prior_bar, const std::array<int, 3>& lags) {
    Eigen::RowVectorXd row(kPriceCols);
    row << prior_bar.open, prior_bar.high, prior_bar.low, prior_bar.close, prior_bar.volume,
        static_cast<double>(lags[0]), static_cast<double>(lags[1]), static_cast<double>(lags[2]);
    return row.replicate(kRows, 1);
}

MatrixXd bow_matrix(const std::array<std::vector<std::size_t>, kRows>& buckets,
                    const std::vector<TweetSignal>& signals, int dim, std::uint64_t hash_seed) {
    MatrixXd m = MatrixXd::Zero(kRows, dim);
    for (int r = 0; r < kRows; ++r) {
        for (std::size_t idx : buckets[r]) {
            for (const auto& token : signals[idx].tokens) {
                const std::uint64_t h = fnv1a(token, hash_seed ^ 1469598103934665603ull);
                m(r, static_cast<int>(h % static_cast<std::uint64_t>(dim))) += 1.0;
            }
        }
    }
    return m;
}

FeatureMatrix assemble(const MatrixXd& twitter_half, const MatrixXd& price_half,
                       std::vector<std::string> column_names, const Date& day) {
    if (twitter_half.rows() != kRows || price_half.rows() != kRows) {
        throw FatalError("assemble: matrix halves must have 12 rows");
    }
    if (static_cast<std::size_t>(twitter_half.cols() + price_half.cols()) !=
        column_names.size()) {
        throw FatalError("assemble: column name count does not match matrix width");
    }
    FeatureMatrix fm;
    fm.values.resize(kRows, twitter_half.cols() + price_half.cols());
    fm.values << twitter_half, price_half;
    fm.column_names = std::move(column_names);
    fm.day = day;
    return fm;
}

std::string feature_set_name(FeatureSet fs) {
    switch (fs) {
        case FeatureSet::kProposed: return "proposed";
        case FeatureSet::kBow8: return "bow8";
        case FeatureSet::kBow16: return "bow16";
        case FeatureSet::kBow24: return "bow24";
        case FeatureSet::kSentimentPrice: return "sentiment_price";
        case FeatureSet::kPriceOnly: return "price_only";
    }
    throw FatalError("unknown feature set");
}

FeatureSet feature_set_from_name(const std::string& name) {
    for (FeatureSet fs : {FeatureSet::kProposed, FeatureSet::kBow8, FeatureSet::kBow16,
                          FeatureSet::kBow24, FeatureSet::kSentimentPrice,
                          FeatureSet::kPriceOnly}) {
        if (feature_set_name(fs) == name) return fs;
    }
    throw FatalError("unknown feature set: " + name);
}

namespace {

std::vector<std::string> price_column_names() {
    return {"open", "high", "low", "close", "trade_volume", "lag1", "lag2", "lag3"};
}

std::vector<std::string> column_names_for(FeatureSet fs) {
    std::vector<std::string> names;
    switch (fs) {
        case FeatureSet::kProposed:
            names = {"writer_score", "n_comments", "n_likes",      "n_retweets",
                     "afinn",        "vader",      "polarity_sum", "tweet_volume"};
            break;
        case FeatureSet::kBow8:
        case FeatureSet::kBow16:
        case FeatureSet::kBow24: {
            const int dim = fs == FeatureSet::kBow8 ? 8 : fs == FeatureSet::kBow16 ? 16 : 24;
            for (int i = 0; i < dim; ++i) names.push_back("bow" + std::to_string(i));
            break;
        }
        case FeatureSet::kSentimentPrice:
            names = {"afinn", "vader", "polarity_sum"};
            break;
        case FeatureSet::kPriceOnly:
            break;
    }
    for (auto& n : price_column_names()) names.push_back(n);
    return names;
}

}  // namespace

std::vector<LabeledInstance> build_dataset(const ingest::AlignedCorpus& corpus,
                                           const textprep::StopwordSet& stopwords,
                                           const DatasetOptions& options) {
    const auto& bars = corpus.bars;
    std::vector<LabeledInstance> instances;
    if (bars.size() < 4) {
        warn("too few trading days (" + std::to_string(bars.size()) +
             ") to build any instance; need at least 4");
        return instances;
    }
    const Timezone tz = Timezone::parse(options.timezone);
    const auto signals = compute_signals(corpus.tweets, stopwords, options.signals);

    std::vector<int> labels(bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) labels[i] = label(bars[i]);

    const auto names = column_names_for(options.feature_set);
    for (std::size_t i = 3; i < bars.size(); ++i) {
        // Tweet window ends at the anchor day's 16:00 close and starts at the
        // prior trading day's close, so weekend posts land in Monday's window.
        const std::size_t anchor = options.window_end == WindowEnd::kTargetClose ? i : i - 1;
        const EpochSeconds win_end =
            tz.to_utc(CivilTime{bars[anchor].date, 16, 0, 0});
        const EpochSeconds win_start =
            tz.to_utc(CivilTime{bars[anchor - 1].date, 16, 0, 0});

        const auto buckets = bucket(signals, win_start, win_end, tz);
        MatrixXd twitter_half;
        switch (options.feature_set) {
            case FeatureSet::kProposed:
                twitter_half = twitter_matrix(buckets, signals);
                break;
            case FeatureSet::kBow8:
                twitter_half = bow_matrix(buckets, signals, 8, options.bow_seed);
                break;
            case FeatureSet::kBow16:
                twitter_half = bow_matrix(buckets, signals, 16, options.bow_seed);
                break;
            case FeatureSet::kBow24:
                twitter_half = bow_matrix(buckets, signals, 24, options.bow_seed);
                break;
            case FeatureSet::kSentimentPrice:
                twitter_half = twitter_matrix(buckets, signals).middleCols(4, 3);
                break;
            case FeatureSet::kPriceOnly:
                twitter_half = MatrixXd::Zero(kRows, 0);
                break;
        }
        const MatrixXd price_half =
            price_matrix(bars[i - 1], {labels[i - 1], labels[i - 2], labels[i - 3]});

        LabeledInstance inst;
        inst.x = assemble(twitter_half, price_half, names, bars[i].date);
        inst.label = labels[i];
        inst.day = bars[i].date;
        instances.push_back(std::move(inst));
    }
    return instances;
}

Scaler Scaler::fit(const std::vector<LabeledInstance>& train) {
    std::vector<const MatrixXd*> mats;
    mats.reserve(train.size());
    for (const auto& inst : train) mats.push_back(&inst.x.values);
    return fit_matrices(mats);
}

Scaler Scaler::fit_matrices(const std::vector<const MatrixXd*>& train) {
    if (train.empty()) throw FatalError("cannot fit scaler on empty training set");
    const Eigen::Index cols = train.front()->cols();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(cols);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(cols);
    double n = 0;
    for (const auto* m : train) {
        mean += m->colwise().sum().transpose();
        sq += m->array().square().colwise().sum().matrix().transpose();
        n += static_cast<double>(m->rows());
    }
    mean /= n;
    Scaler s;
    s.mean_ = mean;
    s.stddev_ = ((sq.array() / n) - mean.array().square()).max(0.0).sqrt();
    s.compute_fingerprint();
    return s;
}

Scaler Scaler::from_params(Eigen::VectorXd mean, Eigen::VectorXd stddev) {
    Scaler s;
    s.mean_ = std::move(mean);
    s.stddev_ = std::move(stddev);
    s.compute_fingerprint();
    return s;
}

MatrixXd Scaler::apply(const MatrixXd& x) const {
    if (x.cols() != mean_.size()) throw FatalError("scaler width mismatch");
    MatrixXd out = x;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        if (stddev_(c) < kMinStd) continue;  // degenerate column passes through
        out.col(c) = (x.col(c).array() - mean_(c)) / stddev_(c);
    }
    return out;
}

void Scaler::compute_fingerprint() {
    std::uint64_t h = fnv1a(mean_.data(), sizeof(double) * mean_.size());
    fingerprint_ = fnv1a(stddev_.data(), sizeof(double) * stddev_.size(), h);
}

std::string instance_to_json_line(const LabeledInstance& inst) {
    nlohmann::ordered_json j;
    j["day"] = inst.day.to_string();
    j["label"] = inst.label;
    j["row_times"] = row_times();
    j["column_names"] = inst.x.column_names;
    auto values = nlohmann::ordered_json::array();
    for (int r = 0; r < inst.x.values.rows(); ++r) {
        auto row = nlohmann::ordered_json::array();
        for (int c = 0; c < inst.x.values.cols(); ++c) row.push_back(inst.x.values(r, c));
        values.push_back(std::move(row));
    }
    j["values"] = std::move(values);
    return j.dump();
}

LabeledInstance instance_from_json_line(const std::string& line) {
    const auto j = nlohmann::json::parse(line);
    LabeledInstance inst;
    const auto day = parse_date(j.at("day").get<std::string>());
    if (!day) throw FatalError("bad day in instance line");
    inst.day = *day;
    inst.label = j.at("label").get<int>();
    inst.x.day = *day;
    inst.x.column_names = j.at("column_names").get<std::vector<std::string>>();
    const auto& values = j.at("values");
    const int rows = static_cast<int>(values.size());
    const int cols = rows > 0 ? static_cast<int>(values[0].size()) : 0;
    inst.x.values.resize(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) inst.x.values(r, c) = values[r][c].get<double>();
    }
    return inst;
}

void write_instances_jsonl(const std::vector<LabeledInstance>& instances,
                           const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FatalError("cannot write " + path);
    for (const auto& inst : instances) out << instance_to_json_line(inst) << '\n';
}

std::vector<LabeledInstance> read_instances_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot open " + path);
    std::vector<LabeledInstance> instances;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) instances.push_back(instance_from_json_line(line));
    }
    return instances;
}

}  // namespace fintwit::feat
