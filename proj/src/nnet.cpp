#include "fintwit/nnet.hpp"

#include <cmath>

#include "fintwit/common.hpp"

namespace fintwit::nnet {

std::string arch_name(Arch arch) { return arch == Arch::kCnn ? "cnn" : "cnn_lstm"; }

Arch arch_from_name(const std::string& name) {
    if (name == "cnn") return Arch::kCnn;
    if (name == "cnn_lstm") return Arch::kCnnLstm;
    throw FatalError("unknown architecture: " + name);
}

int ModelConfig::auto_conv_blocks(int /*rows*/, int cols) { return cols >= 16 ? 2 : 1; }

MatrixXd& ParamSet::add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    items_.emplace_back(name, MatrixXd::Zero(rows, cols));
    return items_.back().second;
}

MatrixXd& ParamSet::at(const std::string& name) {
    for (auto& [n, m] : items_) {
        if (n == name) return m;
    }
    throw FatalError("unknown parameter: " + name);
}

const MatrixXd& ParamSet::at(const std::string& name) const {
    for (const auto& [n, m] : items_) {
        if (n == name) return m;
    }
    throw FatalError("unknown parameter: " + name);
}

bool ParamSet::has(const std::string& name) const {
    for (const auto& [n, m] : items_) {
        if (n == name) return true;
    }
    return false;
}

ParamSet ParamSet::zeros_like() const {
    ParamSet out;
    for (const auto& [name, m] : items_) out.add(name, m.rows(), m.cols());
    return out;
}

void ParamSet::fill_glorot(Rng& rng) {
    for (auto& [name, m] : items_) {
        if (name.size() >= 2 && name.compare(name.size() - 2, 2, ".b") == 0) {
            m.setZero();
            continue;
        }
        const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-limit, limit);
        }
    }
}

namespace layers {

MatrixXd im2col(const FeatureMap& in) {
    const int B = in.batch, H = in.height, W = in.width, C = in.channels();
    MatrixXd patches = MatrixXd::Zero(static_cast<Eigen::Index>(B) * H * W, 9 * C);
    for (int b = 0; b < B; ++b) {
        const Eigen::Index base = static_cast<Eigen::Index>(b) * H * W;
        for (int i = 0; i < H; ++i) {
            for (int j = 0; j < W; ++j) {
                const Eigen::Index row = base + static_cast<Eigen::Index>(i) * W + j;
                int o = 0;
                for (int di = -1; di <= 1; ++di) {
                    for (int dj = -1; dj <= 1; ++dj, ++o) {
                        const int si = i + di, sj = j + dj;
                        if (si < 0 || si >= H || sj < 0 || sj >= W) continue;
                        patches.block(row, static_cast<Eigen::Index>(o) * C, 1, C) =
                            in.a.row(base + static_cast<Eigen::Index>(si) * W + sj);
                    }
                }
            }
        }
    }
    return patches;
}

FeatureMap conv_forward(const FeatureMap& in, const MatrixXd& W, const RowVectorXd& b,
                        MatrixXd* patches_out) {
    MatrixXd patches = im2col(in);
    FeatureMap out;
    out.batch = in.batch;
    out.height = in.height;
    out.width = in.width;
    out.a = patches * W;
    out.a.rowwise() += b;
    if (patches_out) *patches_out = std::move(patches);
    return out;
}

FeatureMap conv_backward(const FeatureMap& in, const MatrixXd& W, const MatrixXd& patches,
                         const FeatureMap& d_out, MatrixXd& dW, RowVectorXd& db) {
    dW = patches.transpose() * d_out.a;
    db = d_out.a.colwise().sum();
    const MatrixXd d_patches = d_out.a * W.transpose();

    const int B = in.batch, H = in.height, W_ = in.width, C = in.channels();
    FeatureMap d_in;
    d_in.batch = B;
    d_in.height = H;
    d_in.width = W_;
    d_in.a = MatrixXd::Zero(in.a.rows(), in.a.cols());
    for (int b = 0; b < B; ++b) {
        const Eigen::Index base = static_cast<Eigen::Index>(b) * H * W_;
        for (int i = 0; i < H; ++i) {
            for (int j = 0; j < W_; ++j) {
                const Eigen::Index row = base + static_cast<Eigen::Index>(i) * W_ + j;
                int o = 0;
                for (int di = -1; di <= 1; ++di) {
                    for (int dj = -1; dj <= 1; ++dj, ++o) {
                        const int si = i + di, sj = j + dj;
                        if (si < 0 || si >= H || sj < 0 || sj >= W_) continue;
                        d_in.a.row(base + static_cast<Eigen::Index>(si) * W_ + sj) +=
                            d_patches.block(row, static_cast<Eigen::Index>(o) * C, 1, C);
                    }
                }
            }
        }
    }
    return d_in;
}

MatrixXd relu(const MatrixXd& z) { return z.cwiseMax(0.0); }

MatrixXd relu_backward(const MatrixXd& z, const MatrixXd& d_out) {
    return (z.array() > 0.0).select(d_out, MatrixXd::Zero(d_out.rows(), d_out.cols()));
}

FeatureMap maxpool_forward(const FeatureMap& in, MatrixXi* argmax_out) {
    const int B = in.batch, H = in.height, W = in.width, C = in.channels();
    const int H2 = H / 2, W2 = W / 2;
    FeatureMap out;
    out.batch = B;
    out.height = H2;
    out.width = W2;
    out.a.resize(static_cast<Eigen::Index>(B) * H2 * W2, C);
    MatrixXi argmax(out.a.rows(), C);
    for (int b = 0; b < B; ++b) {
        const Eigen::Index in_base = static_cast<Eigen::Index>(b) * H * W;
        const Eigen::Index out_base = static_cast<Eigen::Index>(b) * H2 * W2;
        for (int i = 0; i < H2; ++i) {
            for (int j = 0; j < W2; ++j) {
                const Eigen::Index out_row = out_base + static_cast<Eigen::Index>(i) * W2 + j;
                const Eigen::Index r00 = in_base + static_cast<Eigen::Index>(2 * i) * W + 2 * j;
                const Eigen::Index rows[4] = {r00, r00 + 1, r00 + W, r00 + W + 1};
                for (int c = 0; c < C; ++c) {
                    double best = in.a(rows[0], c);
                    Eigen::Index best_row = rows[0];
                    for (int k = 1; k < 4; ++k) {
                        if (in.a(rows[k], c) > best) {
                            best = in.a(rows[k], c);
                            best_row = rows[k];
                        }
                    }
                    out.a(out_row, c) = best;
                    argmax(out_row, c) = static_cast<int>(best_row);
                }
            }
        }
    }
    if (argmax_out) *argmax_out = std::move(argmax);
    return out;
}

FeatureMap maxpool_backward(const FeatureMap& in, const FeatureMap& d_out,
                            const MatrixXi& argmax) {
    FeatureMap d_in;
    d_in.batch = in.batch;
    d_in.height = in.height;
    d_in.width = in.width;
    d_in.a = MatrixXd::Zero(in.a.rows(), in.a.cols());
    for (Eigen::Index r = 0; r < d_out.a.rows(); ++r) {
        for (Eigen::Index c = 0; c < d_out.a.cols(); ++c) {
            d_in.a(argmax(r, c), c) += d_out.a(r, c);
        }
    }
    return d_in;
}

MatrixXd flatten(const FeatureMap& in) {
    const int B = in.batch, HW = in.height * in.width, C = in.channels();
    MatrixXd x(B, static_cast<Eigen::Index>(C) * HW);
    for (int b = 0; b < B; ++b) {
        for (int c = 0; c < C; ++c) {
            x.block(b, static_cast<Eigen::Index>(c) * HW, 1, HW) =
                in.a.col(c).segment(static_cast<Eigen::Index>(b) * HW, HW).transpose();
        }
    }
    return x;
}

FeatureMap unflatten(const MatrixXd& d_flat, int batch, int height, int width, int channels) {
    FeatureMap out;
    out.batch = batch;
    out.height = height;
    out.width = width;
    const int HW = height * width;
    out.a.resize(static_cast<Eigen::Index>(batch) * HW, channels);
    for (int b = 0; b < batch; ++b) {
        for (int c = 0; c < channels; ++c) {
            out.a.col(c).segment(static_cast<Eigen::Index>(b) * HW, HW) =
                d_flat.block(b, static_cast<Eigen::Index>(c) * HW, 1, HW).transpose();
        }
    }
    return out;
}

MatrixXd dense_forward(const MatrixXd& x, const MatrixXd& W, const RowVectorXd& b) {
    MatrixXd out = x * W;
    out.rowwise() += b;
    return out;
}

MatrixXd dense_backward(const MatrixXd& x, const MatrixXd& W, const MatrixXd& d_out,
                        MatrixXd& dW, RowVectorXd& db) {
    dW = x.transpose() * d_out;
    db = d_out.colwise().sum();
    return d_out * W.transpose();
}

MatrixXd sigmoid(const MatrixXd& z) {
    return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

MatrixXd lstm_forward(const std::vector<MatrixXd>& steps, const MatrixXd& Wx, const MatrixXd& Wh,
                      const RowVectorXd& b, LstmCache* cache) {
    const Eigen::Index B = steps.front().rows();
    const Eigen::Index H = Wh.rows();
    MatrixXd h = MatrixXd::Zero(B, H);
    MatrixXd c = MatrixXd::Zero(B, H);
    for (const MatrixXd& x : steps) {
        MatrixXd gates = x * Wx + h * Wh;
        gates.rowwise() += b;
        const MatrixXd i = sigmoid(gates.leftCols(H));
        const MatrixXd f = sigmoid(gates.middleCols(H, H));
        const MatrixXd g = gates.middleCols(2 * H, H).array().tanh().matrix();
        const MatrixXd o = sigmoid(gates.rightCols(H));
        const MatrixXd c_new = f.cwiseProduct(c) + i.cwiseProduct(g);
        const MatrixXd tanh_c = c_new.array().tanh().matrix();
        const MatrixXd h_new = o.cwiseProduct(tanh_c);
        if (cache) {
            cache->inputs.push_back(x);
            cache->i.push_back(i);
            cache->f.push_back(f);
            cache->g.push_back(g);
            cache->o.push_back(o);
            cache->c.push_back(c);        // cell state BEFORE this step
            cache->tanh_c.push_back(tanh_c);
            cache->h.push_back(h);        // hidden state BEFORE this step
        }
        c = c_new;
        h = h_new;
    }
    return h;
}

void lstm_backward(const MatrixXd& Wx, const MatrixXd& Wh, const LstmCache& cache,
                   const MatrixXd& d_h_final, MatrixXd& dWx, MatrixXd& dWh, RowVectorXd& db,
                   std::vector<MatrixXd>& d_steps) {
    const Eigen::Index H = Wh.rows();
    const int T = static_cast<int>(cache.inputs.size());
    dWx = MatrixXd::Zero(Wx.rows(), Wx.cols());
    dWh = MatrixXd::Zero(Wh.rows(), Wh.cols());
    db = RowVectorXd::Zero(4 * H);
    d_steps.assign(T, MatrixXd());

    MatrixXd d_h = d_h_final;
    MatrixXd d_c = MatrixXd::Zero(d_h.rows(), H);
    for (int t = T - 1; t >= 0; --t) {
        const MatrixXd& i = cache.i[t];
        const MatrixXd& f = cache.f[t];
        const MatrixXd& g = cache.g[t];
        const MatrixXd& o = cache.o[t];
        const MatrixXd& c_prev = cache.c[t];
        const MatrixXd& tanh_c = cache.tanh_c[t];

        const MatrixXd d_o = d_h.cwiseProduct(tanh_c);
        const MatrixXd d_c_total =
            d_c + d_h.cwiseProduct(o).cwiseProduct(
                      (1.0 - tanh_c.array().square()).matrix());
        const MatrixXd d_i = d_c_total.cwiseProduct(g);
        const MatrixXd d_g = d_c_total.cwiseProduct(i);
        const MatrixXd d_f = d_c_total.cwiseProduct(c_prev);

        MatrixXd d_gates(d_h.rows(), 4 * H);
        d_gates.leftCols(H) = d_i.cwiseProduct(i).cwiseProduct((1.0 - i.array()).matrix());
        d_gates.middleCols(H, H) =
            d_f.cwiseProduct(f).cwiseProduct((1.0 - f.array()).matrix());
        d_gates.middleCols(2 * H, H) =
            d_g.cwiseProduct((1.0 - g.array().square()).matrix());
        d_gates.rightCols(H) = d_o.cwiseProduct(o).cwiseProduct((1.0 - o.array()).matrix());

        dWx += cache.inputs[t].transpose() * d_gates;
        dWh += cache.h[t].transpose() * d_gates;
        db += d_gates.colwise().sum();
        d_steps[t] = d_gates * Wx.transpose();

        d_h = d_gates * Wh.transpose();
        d_c = d_c_total.cwiseProduct(f);
    }
}

}  // namespace layers

namespace {

void check_finite(const MatrixXd& m, const char* layer) {
    if (!m.allFinite()) {
        throw FatalError(std::string("non-finite activation in layer: ") + layer);
    }
}

}  // namespace

Network::Network(const ModelConfig& config) : config_(config) {
    const int C1 = config.channels1;
    const int C2 = config.channels2;
    params_.add("conv1.W", 9, C1);
    params_.add("conv1.b", 1, C1);
    int h = config.rows / 2, w = config.cols / 2, ch = C1;
    if (config.conv_blocks == 2) {
        params_.add("conv2.W", 9 * C1, C2);
        params_.add("conv2.b", 1, C2);
        h /= 2;
        w /= 2;
        ch = C2;
    } else if (config.conv_blocks != 1) {
        throw FatalError("conv_blocks must be 1 or 2");
    }
    flat_dim_ = h * w * ch;
    if (flat_dim_ <= 0) throw FatalError("input too small for the configured conv blocks");
    params_.add("fc1.W", flat_dim_, config.dense_hidden);
    params_.add("fc1.b", 1, config.dense_hidden);
    if (config.arch == Arch::kCnnLstm) {
        params_.add("lstm.Wx", config.dense_hidden, 4 * config.lstm_hidden);
        params_.add("lstm.Wh", config.lstm_hidden, 4 * config.lstm_hidden);
        params_.add("lstm.b", 1, 4 * config.lstm_hidden);
        params_.add("out.W", config.lstm_hidden, 1);
    } else {
        params_.add("out.W", config.dense_hidden, 1);
    }
    params_.add("out.b", 1, 1);
}

void Network::init_weights(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x77e1));
    params_.fill_glorot(rng);
}

VectorXd Network::forward(const std::vector<const std::vector<MatrixXd>*>& batch,
                          ForwardCache* cache) const {
    const int T = config_.arch == Arch::kCnnLstm ? kLstmSteps : 1;
    const int B = static_cast<int>(batch.size());
    const int H = config_.rows, W = config_.cols;

    ForwardCache local;
    ForwardCache& cc = cache ? *cache : local;
    cc.batch = B;

    // All timesteps of all instances run through the encoder as one batch.
    cc.input.batch = B * T;
    cc.input.height = H;
    cc.input.width = W;
    cc.input.a.resize(static_cast<Eigen::Index>(B) * T * H * W, 1);
    for (int b = 0; b < B; ++b) {
        const auto& steps = *batch[b];
        if (static_cast<int>(steps.size()) != T) {
            throw FatalError("instance has " + std::to_string(steps.size()) +
                             " timesteps, expected " + std::to_string(T));
        }
        for (int t = 0; t < T; ++t) {
            const MatrixXd& x = steps[t];
            if (x.rows() != H || x.cols() != W) throw FatalError("instance shape mismatch");
            for (int i = 0; i < H; ++i) {
                for (int j = 0; j < W; ++j) {
                    cc.input.a((static_cast<Eigen::Index>(b) * T + t) * H * W +
                                   static_cast<Eigen::Index>(i) * W + j,
                               0) = x(i, j);
                }
            }
        }
    }

    cc.conv1_out = layers::conv_forward(cc.input, params_.at("conv1.W"),
                                        params_.at("conv1.b").row(0), &cc.conv1_patches);
    check_finite(cc.conv1_out.a, "conv1");
    cc.relu1_out = cc.conv1_out;
    cc.relu1_out.a = layers::relu(cc.conv1_out.a);
    cc.pool1_out = layers::maxpool_forward(cc.relu1_out, &cc.pool1_argmax);

    const FeatureMap* encoder_out = &cc.pool1_out;
    if (config_.conv_blocks == 2) {
        cc.conv2_out = layers::conv_forward(cc.pool1_out, params_.at("conv2.W"),
                                            params_.at("conv2.b").row(0), &cc.conv2_patches);
        check_finite(cc.conv2_out.a, "conv2");
        cc.relu2_out = cc.conv2_out;
        cc.relu2_out.a = layers::relu(cc.conv2_out.a);
        cc.pool2_out = layers::maxpool_forward(cc.relu2_out, &cc.pool2_argmax);
        encoder_out = &cc.pool2_out;
    }

    cc.flat = layers::flatten(*encoder_out);
    cc.fc1_pre = layers::dense_forward(cc.flat, params_.at("fc1.W"), params_.at("fc1.b").row(0));
    check_finite(cc.fc1_pre, "fc1");
    cc.embedding = layers::relu(cc.fc1_pre);

    if (config_.arch == Arch::kCnnLstm) {
        std::vector<MatrixXd> step_embeddings(T);
        for (int t = 0; t < T; ++t) {
            MatrixXd e(B, config_.dense_hidden);
            for (int b = 0; b < B; ++b) e.row(b) = cc.embedding.row(b * T + t);
            step_embeddings[t] = std::move(e);
        }
        cc.lstm = layers::LstmCache{};
        cc.head_in = layers::lstm_forward(step_embeddings, params_.at("lstm.Wx"),
                                          params_.at("lstm.Wh"), params_.at("lstm.b").row(0),
                                          &cc.lstm);
        check_finite(cc.head_in, "lstm");
    } else {
        cc.head_in = cc.embedding;
    }

    cc.logits =
        layers::dense_forward(cc.head_in, params_.at("out.W"), params_.at("out.b").row(0));
    check_finite(cc.logits, "out");
    const MatrixXd probs = layers::sigmoid(cc.logits);
    return probs.col(0);
}

ParamSet Network::backward(const ForwardCache& cc, const VectorXd& probs,
                           const VectorXd& labels) const {
    const int B = cc.batch;
    const int T = config_.arch == Arch::kCnnLstm ? kLstmSteps : 1;
    ParamSet grads = params_.zeros_like();

    // d(mean BCE)/d(logit) = (p - y) / B
    MatrixXd d_logits = (probs - labels) / static_cast<double>(B);

    MatrixXd dW_out;
    RowVectorXd db_out;
    MatrixXd d_head_in =
        layers::dense_backward(cc.head_in, params_.at("out.W"), d_logits, dW_out, db_out);
    grads.at("out.W") = dW_out;
    grads.at("out.b").row(0) = db_out;

    MatrixXd d_embedding;
    if (config_.arch == Arch::kCnnLstm) {
        MatrixXd dWx, dWh;
        RowVectorXd db;
        std::vector<MatrixXd> d_steps;
        layers::lstm_backward(params_.at("lstm.Wx"), params_.at("lstm.Wh"), cc.lstm, d_head_in,
                              dWx, dWh, db, d_steps);
        grads.at("lstm.Wx") = dWx;
        grads.at("lstm.Wh") = dWh;
        grads.at("lstm.b").row(0) = db;
        d_embedding.resize(static_cast<Eigen::Index>(B) * T, config_.dense_hidden);
        for (int t = 0; t < T; ++t) {
            for (int b = 0; b < B; ++b) d_embedding.row(b * T + t) = d_steps[t].row(b);
        }
    } else {
        d_embedding = d_head_in;
    }

    const MatrixXd d_fc1_pre = layers::relu_backward(cc.fc1_pre, d_embedding);
    MatrixXd dW_fc1;
    RowVectorXd db_fc1;
    const MatrixXd d_flat =
        layers::dense_backward(cc.flat, params_.at("fc1.W"), d_fc1_pre, dW_fc1, db_fc1);
    grads.at("fc1.W") = dW_fc1;
    grads.at("fc1.b").row(0) = db_fc1;

    const FeatureMap& encoder_out = config_.conv_blocks == 2 ? cc.pool2_out : cc.pool1_out;
    FeatureMap d_enc = layers::unflatten(d_flat, encoder_out.batch, encoder_out.height,
                                         encoder_out.width, encoder_out.channels());

    if (config_.conv_blocks == 2) {
        FeatureMap d_relu2 = layers::maxpool_backward(cc.relu2_out, d_enc, cc.pool2_argmax);
        d_relu2.a = layers::relu_backward(cc.conv2_out.a, d_relu2.a);
        MatrixXd dW_conv2;
        RowVectorXd db_conv2;
        d_enc = layers::conv_backward(cc.pool1_out, params_.at("conv2.W"), cc.conv2_patches,
                                      d_relu2, dW_conv2, db_conv2);
        grads.at("conv2.W") = dW_conv2;
        grads.at("conv2.b").row(0) = db_conv2;
    }

    FeatureMap d_relu1 = layers::maxpool_backward(cc.relu1_out, d_enc, cc.pool1_argmax);
    d_relu1.a = layers::relu_backward(cc.conv1_out.a, d_relu1.a);
    MatrixXd dW_conv1;
    RowVectorXd db_conv1;
    layers::conv_backward(cc.input, params_.at("conv1.W"), cc.conv1_patches, d_relu1, dW_conv1,
                          db_conv1);
    grads.at("conv1.W") = dW_conv1;
    grads.at("conv1.b").row(0) = db_conv1;

    // l2 penalty applies to weight matrices, not biases.
    if (config_.l2 > 0) {
        for (auto& [name, g] : grads) {
            if (name.size() >= 2 && name.compare(name.size() - 2, 2, ".b") == 0) continue;
            g += 2.0 * config_.l2 * params_.at(name);
        }
    }
    return grads;
}

double Network::loss(const VectorXd& probs, const VectorXd& labels) const {
    const auto p = probs.array().min(1.0 - 1e-12).max(1e-12);
    const auto y = labels.array();
    double bce = -(y * p.log() + (1.0 - y) * (1.0 - p).log()).mean();
    if (config_.l2 > 0) {
        for (const auto& [name, m] : params_) {
            if (name.size() >= 2 && name.compare(name.size() - 2, 2, ".b") == 0) continue;
            bce += config_.l2 * m.squaredNorm();
        }
    }
    return bce;
}

}  // namespace fintwit::nnet
