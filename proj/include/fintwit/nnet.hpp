#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fintwit/datetime.hpp"
#include "fintwit/featurize.hpp"
#include "fintwit/rng.hpp"

namespace fintwit::nnet {

using Eigen::MatrixXd;
using Eigen::MatrixXi;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

enum class Arch { kCnn, kCnnLstm };

std::string arch_name(Arch arch);
Arch arch_from_name(const std::string& name);

inline constexpr int kLstmSteps = 3;

struct ModelConfig {
    Arch arch = Arch::kCnn;
    int rows = 12;
    int cols = 16;
    int conv_blocks = 2;  // 1 or 2
    int channels1 = 8;
    int channels2 = 16;
    int dense_hidden = 32;
    int lstm_hidden = 32;
    double l2 = 0.0;
    double learning_rate = 1e-3;
    int epochs = 300;
    int batch_size = 16;
    std::uint64_t seed = 0;

    // Two blocks when the feature axis survives a second pool; narrow
    // benchmark inputs get one.
    static int auto_conv_blocks(int rows, int cols);
};

// Named dense parameters in fixed order; the order defines the update and
// serialization sequence, which keeps runs bit-reproducible.
class ParamSet {
public:
    MatrixXd& add(const std::string& name, Eigen::Index rows, Eigen::Index cols);
    MatrixXd& at(const std::string& name);
    const MatrixXd& at(const std::string& name) const;
    bool has(const std::string& name) const;

    std::size_t size() const { return items_.size(); }
    auto begin() { return items_.begin(); }
    auto end() { return items_.end(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

    ParamSet zeros_like() const;
    void fill_glorot(Rng& rng);

private:
    std::vector<std::pair<std::string, MatrixXd>> items_;
};

// Batched activations of a stack of single-channel images. Row layout is
// ((b * height) + i) * width + j; one column per channel.
struct FeatureMap {
    MatrixXd a;
    int batch = 0;
    int height = 0;
    int width = 0;
    int channels() const { return static_cast<int>(a.cols()); }
};

namespace layers {

// 3x3 same-padding convolution via im2col.
MatrixXd im2col(const FeatureMap& in);
FeatureMap conv_forward(const FeatureMap& in, const MatrixXd& W, const RowVectorXd& b,
                        MatrixXd* patches_out);
FeatureMap conv_backward(const FeatureMap& in, const MatrixXd& W, const MatrixXd& patches,
                         const FeatureMap& d_out, MatrixXd& dW, RowVectorXd& db);

MatrixXd relu(const MatrixXd& z);
MatrixXd relu_backward(const MatrixXd& z, const MatrixXd& d_out);

// 2x2 max pooling, stride 2, trailing row/column dropped on odd sizes.
FeatureMap maxpool_forward(const FeatureMap& in, MatrixXi* argmax_out);
FeatureMap maxpool_backward(const FeatureMap& in, const FeatureMap& d_out,
                            const MatrixXi& argmax);

// (B*H*W x C) feature map to (B x C*H*W) row per sample.
MatrixXd flatten(const FeatureMap& in);
FeatureMap unflatten(const MatrixXd& d_flat, int batch, int height, int width, int channels);

MatrixXd dense_forward(const MatrixXd& x, const MatrixXd& W, const RowVectorXd& b);
MatrixXd dense_backward(const MatrixXd& x, const MatrixXd& W, const MatrixXd& d_out,
                        MatrixXd& dW, RowVectorXd& db);

MatrixXd sigmoid(const MatrixXd& z);

// Single LSTM cell over a fixed number of steps; gate order [i, f, g, o].
struct LstmCache {
    std::vector<MatrixXd> inputs;  // per step, B x D
    std::vector<MatrixXd> i, f, g, o, c, tanh_c, h;
};
MatrixXd lstm_forward(const std::vector<MatrixXd>& steps, const MatrixXd& Wx, const MatrixXd& Wh,
                      const RowVectorXd& b, LstmCache* cache);
void lstm_backward(const MatrixXd& Wx, const MatrixXd& Wh, const LstmCache& cache,
                   const MatrixXd& d_h_final, MatrixXd& dWx, MatrixXd& dWh, RowVectorXd& db,
                   std::vector<MatrixXd>& d_steps);

}  // namespace layers

// Intermediates of one batched forward pass, consumed by backward().
struct ForwardCache {
    FeatureMap input;
    FeatureMap conv1_out;  // pre-activation
    MatrixXd conv1_patches;
    FeatureMap relu1_out;
    FeatureMap pool1_out;
    MatrixXi pool1_argmax;
    FeatureMap conv2_out;
    MatrixXd conv2_patches;
    FeatureMap relu2_out;
    FeatureMap pool2_out;
    MatrixXi pool2_argmax;
    MatrixXd flat;
    MatrixXd fc1_pre;
    MatrixXd embedding;  // relu(fc1_pre)
    layers::LstmCache lstm;
    MatrixXd head_in;  // embedding (CNN) or final hidden state (LSTM)
    MatrixXd logits;
    int batch = 0;
};

// The two architectures share a CNN encoder ending in a dense embedding.
class Network {
public:
    explicit Network(const ModelConfig& config);

    const ModelConfig& config() const { return config_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }

    void init_weights(std::uint64_t seed);

    // Each instance is a list of timestep matrices (1 for CNN, 3 oldest-first
    // for CNN-LSTM), all rows x cols.
    VectorXd forward(const std::vector<const std::vector<MatrixXd>*>& batch,
                     ForwardCache* cache = nullptr) const;

    // Gradients of mean BCE plus the l2 weight penalty.
    ParamSet backward(const ForwardCache& cache, const VectorXd& probs,
                      const VectorXd& labels) const;

    double loss(const VectorXd& probs, const VectorXd& labels) const;

    int flat_dim() const { return flat_dim_; }

private:
    ModelConfig config_;
    ParamSet params_;
    int flat_dim_ = 0;
};

// Scaled, model-ready instance. steps holds the t-1 matrix (and t-2, t-3
// ahead of it for the CNN-LSTM).
struct ScaledInstance {
    std::vector<MatrixXd> steps;
    int label = 0;
    Date day;
    std::uint64_t scaler_fingerprint = 0;
};

struct DataSplits {
    std::vector<ScaledInstance> train, val, test;
    feat::Scaler scaler;
};

struct EpochStats {
    double train_loss = 0;
    double train_acc = 0;
    double val_acc = 0;
    double weight_norm = 0;  // squared norm of weight matrices, biases excluded
};

struct History {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_val_acc = 0;
};

struct TrainedModel {
    ModelConfig config;
    ParamSet weights;
    feat::Scaler scaler;
    History history;
};

// Mini-batch Adam on BCE + l2, returning the weights of the epoch with the
// best validation accuracy. Diverging loss aborts with the seed in the
// message.
TrainedModel train(const DataSplits& splits, const ModelConfig& config);

struct Prediction {
    double probability = 0;
    int label = 0;  // 1 iff probability >= 0.5
};

Prediction predict(const TrainedModel& model, const ScaledInstance& instance);
std::vector<Prediction> predict_batch(const TrainedModel& model,
                                      const std::vector<ScaledInstance>& instances);

// Probabilities for a perturbation fan-out. Instances run through the
// network in fixed-size chunks, so results are deterministic for a given
// list but may differ from per-sample evaluation in the last bits.
VectorXd batch_probabilities(const TrainedModel& model,
                             const std::vector<const std::vector<MatrixXd>*>& batch);
double accuracy(const TrainedModel& model, const std::vector<ScaledInstance>& instances);

// Probability that the next close ends above the open, from one scaled
// t-1 feature matrix.
double forward_cnn(const TrainedModel& model, const MatrixXd& x);

// Same, from the (t-3, t-2, t-1) matrix sequence.
double forward_cnn_lstm(const TrainedModel& model, const std::vector<MatrixXd>& steps);

struct GridSearchResult {
    double best_l2 = 0;
    std::vector<std::pair<double, double>> candidate_mean_val_acc;  // (l2, mean val acc)
};

// Mean validation accuracy over `repeats` seeded runs per candidate; ties
// resolve to the larger l2.
GridSearchResult grid_search(const DataSplits& splits, const ModelConfig& base,
                             const std::vector<double>& l2_grid, int repeats,
                             std::uint64_t base_seed);

// Self-describing JSON checkpoint; version field mandatory.
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace fintwit::nnet
