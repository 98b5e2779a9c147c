#include <doctest.h>

#include <cmath>

#include "fintwit/common.hpp"
#include "fintwit/explain.hpp"
#include "fintwit/rng.hpp"

using namespace fintwit;
using namespace fintwit::explain;

namespace {

MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-scale, scale);
    }
    return m;
}

}  // namespace

TEST_CASE("perturbation sampling basics") {
    Rng rng(1);
    const MatrixXd x = random_matrix(rng, 12, 16);
    const MatrixXd baseline = MatrixXd::Zero(12, 16);
    const auto samples = sample_perturbations(x, 300, baseline, 42);
    REQUIRE(samples.size() == 300);

    // sample 0 is the all-ones mask
    CHECK(samples[0].mask.minCoeff() == 1.0);
    CHECK(samples[0].x_perturbed == x);
    CHECK(samples[0].similarity == 1.0);

    for (const auto& s : samples) {
        for (Eigen::Index r = 0; r < 12; ++r) {
            for (Eigen::Index c = 0; c < 16; ++c) {
                if (s.mask(r, c) == 1.0) {
                    CHECK(s.x_perturbed(r, c) == x(r, c));
                } else {
                    CHECK(s.x_perturbed(r, c) == baseline(r, c));
                }
            }
        }
        CHECK(s.similarity > 0.0);
        CHECK(s.similarity <= 1.0);
    }

    // determinism
    const auto again = sample_perturbations(x, 300, baseline, 42);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(samples[i].mask == again[i].mask);
    }

    // a fully masked sample equals the baseline
    PerturbationSample zero;
    zero.mask = MatrixXd::Zero(12, 16);
    const MatrixXd perturbed =
        zero.mask.cwiseProduct(x) + (MatrixXd::Ones(12, 16) - zero.mask).cwiseProduct(baseline);
    CHECK(perturbed == baseline);

    // budget below the cell count is fatal
    CHECK_THROWS_AS(sample_perturbations(x, 191, baseline, 42), FatalError);
}

TEST_CASE("surrogate on a constant black box") {
    Rng rng(2);
    const MatrixXd x = random_matrix(rng, 12, 16);
    const auto samples = sample_perturbations(x, 400, MatrixXd::Zero(12, 16), 7);
    VectorXd probs = VectorXd::Constant(400, 0.37);
    const auto fit = fit_surrogate(samples, probs, 1e-3);
    CHECK(fit.cell_weights.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(fit.intercept == doctest::Approx(0.37).epsilon(1e-9));
    CHECK(fit.fidelity_r2 == 1.0);
}

TEST_CASE("surrogate recovers a known linear mask function") {
    Rng rng(3);
    const MatrixXd x = random_matrix(rng, 12, 16);
    MatrixXd true_w = random_matrix(rng, 12, 16, 0.05);
    const double true_intercept = 0.2;
    const auto samples = sample_perturbations(x, 2000, MatrixXd::Zero(12, 16), 11);
    VectorXd probs(2000);
    for (std::size_t k = 0; k < samples.size(); ++k) {
        probs(static_cast<Eigen::Index>(k)) =
            true_intercept + samples[k].mask.cwiseProduct(true_w).sum();
    }
    const auto fit = fit_surrogate(samples, probs, 1e-6);
    CHECK((fit.cell_weights - true_w).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(fit.intercept == doctest::Approx(true_intercept).epsilon(1e-6));
    CHECK(fit.fidelity_r2 >= 0.999);
}

TEST_CASE("duplicating every sample leaves the coefficients unchanged") {
    Rng rng(4);
    const MatrixXd x = random_matrix(rng, 12, 16);
    auto samples = sample_perturbations(x, 250, MatrixXd::Zero(12, 16), 13);
    Rng noise(5);
    VectorXd probs(250);
    for (int k = 0; k < 250; ++k) probs(k) = noise.uniform();
    const auto fit1 = fit_surrogate(samples, probs, 1e-3);

    auto doubled = samples;
    doubled.insert(doubled.end(), samples.begin(), samples.end());
    VectorXd probs2(500);
    probs2 << probs, probs;
    const auto fit2 = fit_surrogate(doubled, probs2, 2e-3);  // ridge scales with sample mass
    CHECK((fit1.cell_weights - fit2.cell_weights).cwiseAbs().maxCoeff() < 1e-9);
}

namespace {

// A CNN rigged to ignore two adjacent columns: identity-style center-tap
// convolution, then dense weights that zero out one pooled column.
nnet::TrainedModel column_blind_model() {
    nnet::ModelConfig cfg;
    cfg.arch = nnet::Arch::kCnn;
    cfg.rows = 12;
    cfg.cols = 16;
    cfg.conv_blocks = 1;
    cfg.channels1 = 1;
    cfg.dense_hidden = 4;
    nnet::Network net(cfg);

    auto& conv_w = net.params().at("conv1.W");  // 9 x 1
    conv_w.setZero();
    conv_w(4, 0) = 1.0;  // center tap only: output column j sees input column j

    // pooled grid is 6 x 8; pooled column 0 covers input columns 0 and 1.
    // Every other pooled column is disconnected, so the model structurally
    // ignores input columns 2..15 and the surrogate signal concentrates
    // where the sampling noise cannot swamp it.
    auto& fc1 = net.params().at("fc1.W");  // 48 x 4
    Rng rng(99);
    for (Eigen::Index r = 0; r < fc1.rows(); ++r) {
        const int pooled_col = static_cast<int>(r) % 8;
        for (Eigen::Index c = 0; c < fc1.cols(); ++c) {
            fc1(r, c) = pooled_col == 0 ? rng.uniform(0.6, 1.2) : 0.0;
        }
    }
    auto& out_w = net.params().at("out.W");
    for (Eigen::Index r = 0; r < out_w.rows(); ++r) out_w(r, 0) = rng.uniform(0.04, 0.06);

    nnet::TrainedModel model;
    model.config = cfg;
    model.weights = net.params();
    model.scaler = feat::Scaler::from_params(Eigen::VectorXd::Zero(16),
                                             Eigen::VectorXd::Ones(16));
    return model;
}

}  // namespace

TEST_CASE("explain_instance is deterministic and carries fidelity") {
    const auto model = column_blind_model();
    Rng rng(6);
    nnet::ScaledInstance inst;
    inst.steps.push_back(random_matrix(rng, 12, 16));
    inst.label = 1;
    inst.day = Date{2019, 3, 14};
    inst.scaler_fingerprint = model.scaler.fingerprint();

    Settings settings;
    settings.n_samples = 600;
    settings.base_seed = 21;
    const MatrixXd baseline = MatrixXd::Zero(12, 16);
    const auto a1 = explain_instance(model, inst, baseline, settings);
    const auto a2 = explain_instance(model, inst, baseline, settings);
    CHECK(a1.cell_weights == a2.cell_weights);
    CHECK(a1.fidelity_r2 == a2.fidelity_r2);
    CHECK(a1.fidelity_r2 >= 0.0);
    CHECK(a1.fidelity_r2 <= 1.0);
    CHECK(a1.day == inst.day);
}

TEST_CASE("a model that ignores columns gets near-zero attribution there") {
    const auto model = column_blind_model();
    Rng rng(7);
    nnet::ScaledInstance inst;
    // Signal lives on the even rows of column 0; their pool partners are
    // zero, so the rigged model is almost exactly linear in those masks and
    // sampling noise on the ignored columns stays far below the signal.
    MatrixXd x = MatrixXd::Zero(12, 16);
    for (int r = 0; r < 12; r += 2) x(r, 0) = rng.uniform(0.9, 1.3);
    inst.steps.push_back(x);
    inst.label = 1;
    inst.day = Date{2019, 3, 15};
    inst.scaler_fingerprint = model.scaler.fingerprint();

    Settings settings;
    settings.n_samples = 2000;
    settings.base_seed = 22;
    const auto a = explain_instance(model, inst, MatrixXd::Zero(12, 16), settings);
    const VectorXd mass = a.cell_weights.cwiseAbs().colwise().sum().transpose();
    const double top = mass.maxCoeff();
    CHECK(top == mass(0));
    for (int c = 2; c < 16; ++c) {
        INFO("column ", c);
        CHECK(mass(c) < 0.05 * top);
    }
}

namespace {

std::vector<Attribution> toy_attributions() {
    std::vector<Attribution> attrs(3);
    for (int i = 0; i < 3; ++i) {
        attrs[i].day = add_days(Date{2019, 5, 1}, i);
        attrs[i].cell_weights = MatrixXd::Zero(12, 16);
        attrs[i].predicted = 1;
        attrs[i].correct = i != 1;  // middle one wrong
    }
    attrs[0].cell_weights(3, 7) = 0.5;
    attrs[2].cell_weights(2, 7) = 0.25;
    attrs[2].cell_weights(2, 0) = -0.25;
    return attrs;
}

std::vector<std::string> proposed_names() {
    return std::vector<std::string>(feat::proposed_column_names().begin(),
                                    feat::proposed_column_names().end());
}

}  // namespace

TEST_CASE("aggregation filters to correct predictions and places single-cell mass") {
    const auto attrs = toy_attributions();
    const auto feature = aggregate(attrs, Axis::kFeature, proposed_names());
    const auto time = aggregate(attrs, Axis::kTime, proposed_names());
    REQUIRE(feature.values.size() == 16);
    REQUIRE(time.values.size() == 12);
    // two correct instances; mean abs importance
    CHECK(feature.values(7) == doctest::Approx((0.5 + 0.25) / 2));
    CHECK(feature.values(0) == doctest::Approx(0.25 / 2));
    CHECK(time.values(3) == doctest::Approx(0.5 / 2));
    CHECK(time.values(2) == doctest::Approx(0.5 / 2));
    CHECK(feature.keys[7] == "tweet_volume");
    CHECK(time.keys[2] == "20-22");

    // mass conservation between the two axes
    CHECK(feature.values.sum() == doctest::Approx(time.values.sum()).epsilon(1e-12));
}

TEST_CASE("all-wrong attributions aggregate to empty tables and series") {
    auto attrs = toy_attributions();
    for (auto& a : attrs) a.correct = false;
    const auto feature = aggregate(attrs, Axis::kFeature, proposed_names());
    CHECK(feature.values.size() == 0);
    CHECK(instance_series(attrs).empty());
}

TEST_CASE("instance series rows match correct predictions and conserve mass") {
    const auto attrs = toy_attributions();
    const auto series = instance_series(attrs);
    REQUIRE(series.size() == 2);
    CHECK(series[0].day == attrs[0].day);
    CHECK(series[1].day == attrs[2].day);
    CHECK(series[0].feature_mass.sum() ==
          doctest::Approx(attrs[0].cell_weights.cwiseAbs().sum()));
    CHECK(series[1].feature_mass.sum() ==
          doctest::Approx(attrs[2].cell_weights.cwiseAbs().sum()));
}

TEST_CASE("attribution json line has the documented keys") {
    const auto attrs = toy_attributions();
    const std::string line = attribution_to_json_line(attrs[0]);
    CHECK(line.find("\"day\"") != std::string::npos);
    CHECK(line.find("\"predicted\"") != std::string::npos);
    CHECK(line.find("\"correct\"") != std::string::npos);
    CHECK(line.find("\"fidelity_r2\"") != std::string::npos);
    CHECK(line.find("\"cell_weights\"") != std::string::npos);
}
