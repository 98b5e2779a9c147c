#include <algorithm>
#include <cmath>
#include <numeric>

#include "fintwit/common.hpp"
#include "fintwit/nnet.hpp"

namespace fintwit::nnet {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

struct Adam {
    explicit Adam(const ParamSet& params, double lr) : lr_(lr) {
        m_ = params.zeros_like();
        v_ = params.zeros_like();
    }

    void step(ParamSet& params, const ParamSet& grads) {
        ++t_;
        const double bc1 = 1.0 - std::pow(kAdamBeta1, t_);
        const double bc2 = 1.0 - std::pow(kAdamBeta2, t_);
        auto m_it = m_.begin();
        auto v_it = v_.begin();
        auto g_it = grads.begin();
        for (auto& [name, w] : params) {
            MatrixXd& m = m_it->second;
            MatrixXd& v = v_it->second;
            const MatrixXd& g = g_it->second;
            m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
            v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.cwiseProduct(g);
            w.array() -=
                lr_ * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kAdamEps);
            ++m_it;
            ++v_it;
            ++g_it;
        }
    }

    double lr_;
    long t_ = 0;
    ParamSet m_, v_;
};

std::vector<const std::vector<MatrixXd>*> make_batch(const std::vector<ScaledInstance>& data,
                                                     const std::vector<std::size_t>& order,
                                                     std::size_t begin, std::size_t end) {
    std::vector<const std::vector<MatrixXd>*> batch;
    batch.reserve(end - begin);
    for (std::size_t k = begin; k < end; ++k) batch.push_back(&data[order[k]].steps);
    return batch;
}

VectorXd batch_labels(const std::vector<ScaledInstance>& data,
                      const std::vector<std::size_t>& order, std::size_t begin,
                      std::size_t end) {
    VectorXd y(end - begin);
    for (std::size_t k = begin; k < end; ++k) y(k - begin) = data[order[k]].label;
    return y;
}

double evaluate_accuracy(const Network& net, const std::vector<ScaledInstance>& data) {
    if (data.empty()) return 0.0;
    constexpr std::size_t kChunk = 256;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < data.size(); begin += kChunk) {
        const std::size_t end = std::min(begin + kChunk, data.size());
        std::vector<const std::vector<MatrixXd>*> batch;
        batch.reserve(end - begin);
        for (std::size_t k = begin; k < end; ++k) batch.push_back(&data[k].steps);
        const VectorXd probs = net.forward(batch);
        for (std::size_t k = begin; k < end; ++k) {
            const int pred = probs(k - begin) >= 0.5 ? 1 : 0;
            if (pred == data[k].label) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace

TrainedModel train(const DataSplits& splits, const ModelConfig& config) {
    if (splits.train.empty()) throw FatalError("training split is empty");
    Network net(config);
    net.init_weights(config.seed);
    Adam adam(net.params(), config.learning_rate);
    Rng shuffle_rng(derive_seed(config.seed, 0x5f0f));

    History history;
    ParamSet best_weights = net.params();

    std::vector<std::size_t> order(splits.train.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0;
        std::size_t n_batches = 0;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(begin + static_cast<std::size_t>(config.batch_size), order.size());
            const auto batch = make_batch(splits.train, order, begin, end);
            const VectorXd labels = batch_labels(splits.train, order, begin, end);

            ForwardCache cache;
            const VectorXd probs = net.forward(batch, &cache);
            const double batch_loss = net.loss(probs, labels);
            if (!std::isfinite(batch_loss)) {
                throw FatalError("training diverged (non-finite loss) at epoch " +
                                 std::to_string(epoch) + ", seed " +
                                 std::to_string(config.seed));
            }
            loss_sum += batch_loss;
            ++n_batches;

            const ParamSet grads = net.backward(cache, probs, labels);
            adam.step(net.params(), grads);
        }

        EpochStats stats;
        stats.train_loss = loss_sum / static_cast<double>(n_batches);
        stats.train_acc = evaluate_accuracy(net, splits.train);
        stats.val_acc = evaluate_accuracy(net, splits.val);
        for (const auto& [name, w] : net.params()) {
            if (name.compare(name.size() - 2, 2, ".b") != 0) stats.weight_norm += w.squaredNorm();
        }
        history.epochs.push_back(stats);

        if (history.best_epoch < 0 || stats.val_acc > history.best_val_acc) {
            history.best_epoch = epoch;
            history.best_val_acc = stats.val_acc;
            best_weights = net.params();
        }
    }

    TrainedModel model;
    model.config = config;
    model.weights = std::move(best_weights);
    model.scaler = splits.scaler;
    model.history = std::move(history);
    return model;
}

Prediction predict(const TrainedModel& model, const ScaledInstance& instance) {
    if (instance.scaler_fingerprint != model.scaler.fingerprint()) {
        throw FatalError("instance was not scaled with this model's scaler");
    }
    Network net(model.config);
    net.params() = model.weights;
    const VectorXd probs = net.forward({&instance.steps});
    Prediction p;
    p.probability = probs(0);
    p.label = p.probability >= 0.5 ? 1 : 0;
    return p;
}

std::vector<Prediction> predict_batch(const TrainedModel& model,
                                      const std::vector<ScaledInstance>& instances) {
    // One instance per forward pass: GEMM tail kernels round differently
    // across batch shapes, and batch predictions must equal single ones
    // exactly.
    Network net(model.config);
    net.params() = model.weights;
    std::vector<Prediction> out;
    out.reserve(instances.size());
    for (const auto& inst : instances) {
        if (inst.scaler_fingerprint != model.scaler.fingerprint()) {
            throw FatalError("instance was not scaled with this model's scaler");
        }
        Prediction p;
        p.probability = net.forward({&inst.steps})(0);
        p.label = p.probability >= 0.5 ? 1 : 0;
        out.push_back(p);
    }
    return out;
}

VectorXd batch_probabilities(const TrainedModel& model,
                             const std::vector<const std::vector<MatrixXd>*>& batch) {
    Network net(model.config);
    net.params() = model.weights;
    VectorXd out(static_cast<Eigen::Index>(batch.size()));
    constexpr std::size_t kChunk = 256;
    for (std::size_t begin = 0; begin < batch.size(); begin += kChunk) {
        const std::size_t end = std::min(begin + kChunk, batch.size());
        const std::vector<const std::vector<MatrixXd>*> chunk(batch.begin() + begin,
                                                              batch.begin() + end);
        const VectorXd probs = net.forward(chunk);
        out.segment(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)) =
            probs;
    }
    return out;
}

double accuracy(const TrainedModel& model, const std::vector<ScaledInstance>& instances) {
    if (instances.empty()) return 0.0;
    const auto preds = predict_batch(model, instances);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (preds[i].label == instances[i].label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(instances.size());
}

double forward_cnn(const TrainedModel& model, const MatrixXd& x) {
    if (model.config.arch != Arch::kCnn) throw FatalError("model is not a CNN");
    Network net(model.config);
    net.params() = model.weights;
    const std::vector<MatrixXd> steps = {x};
    return net.forward({&steps})(0);
}

double forward_cnn_lstm(const TrainedModel& model, const std::vector<MatrixXd>& steps) {
    if (model.config.arch != Arch::kCnnLstm) throw FatalError("model is not a CNN-LSTM");
    Network net(model.config);
    net.params() = model.weights;
    return net.forward({&steps})(0);
}

GridSearchResult grid_search(const DataSplits& splits, const ModelConfig& base,
                             const std::vector<double>& l2_grid, int repeats,
                             std::uint64_t base_seed) {
    if (l2_grid.empty()) throw FatalError("empty l2 grid");
    std::vector<double> grid = l2_grid;
    std::sort(grid.begin(), grid.end());
    GridSearchResult result;
    double best_acc = -1.0;
    for (double l2 : grid) {
        ModelConfig cfg = base;
        cfg.l2 = l2;
        double acc_sum = 0;
        for (int r = 0; r < repeats; ++r) {
            cfg.seed = derive_seed(base_seed, 0x9d1d + static_cast<std::uint64_t>(r));
            const TrainedModel model = train(splits, cfg);
            acc_sum += model.history.best_val_acc;
        }
        const double mean_acc = acc_sum / repeats;
        result.candidate_mean_val_acc.emplace_back(l2, mean_acc);
        // Ties prefer the larger (simpler) regularizer; the grid is ascending.
        if (mean_acc >= best_acc) {
            best_acc = mean_acc;
            result.best_l2 = l2;
        }
    }
    return result;
}

}  // namespace fintwit::nnet
