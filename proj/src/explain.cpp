#include "fintwit/explain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fintwit/common.hpp"
#include "fintwit/rng.hpp"

namespace fintwit::explain {

std::vector<PerturbationSample> sample_perturbations(const MatrixXd& x, int n,
                                                     const MatrixXd& baseline,
                                                     std::uint64_t seed, double kernel_width) {
    const Eigen::Index rows = x.rows(), cols = x.cols();
    const Eigen::Index n_cells = rows * cols;
    if (n < n_cells) {
        throw FatalError("perturbation budget " + std::to_string(n) + " is below the " +
                         std::to_string(n_cells) + " interpretable cells");
    }
    if (baseline.rows() != rows || baseline.cols() != cols) {
        throw FatalError("baseline shape mismatch");
    }

    Rng rng(seed);
    std::vector<PerturbationSample> samples;
    samples.reserve(n);
    for (int k = 0; k < n; ++k) {
        PerturbationSample s;
        if (k == 0) {
            s.mask = MatrixXd::Ones(rows, cols);
        } else {
            s.mask.resize(rows, cols);
            for (Eigen::Index r = 0; r < rows; ++r) {
                for (Eigen::Index c = 0; c < cols; ++c) {
                    s.mask(r, c) = rng.bernoulli(0.5) ? 1.0 : 0.0;
                }
            }
        }
        s.x_perturbed = s.mask.cwiseProduct(x) + (MatrixXd::Ones(rows, cols) - s.mask)
                                                     .cwiseProduct(baseline);
        const double masked_fraction =
            1.0 - s.mask.sum() / static_cast<double>(n_cells);
        s.similarity =
            std::exp(-(masked_fraction * masked_fraction) / (kernel_width * kernel_width));
        samples.push_back(std::move(s));
    }
    return samples;
}

SurrogateFit fit_surrogate(const std::vector<PerturbationSample>& samples,
                           const VectorXd& probabilities, double l2_ridge) {
    if (samples.size() < 2) throw FatalError("surrogate needs at least two samples");
    if (l2_ridge <= 0) throw FatalError("ridge strength must be positive");
    const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
    if (probabilities.size() != n) throw FatalError("probability count mismatch");
    const Eigen::Index rows = samples.front().mask.rows();
    const Eigen::Index cols = samples.front().mask.cols();
    const Eigen::Index d = rows * cols;

    // Design matrix [1 | mask], row-major cell order.
    MatrixXd X(n, d + 1);
    VectorXd w(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        X(k, 0) = 1.0;
        const MatrixXd& mask = samples[k].mask;
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) X(k, 1 + r * cols + c) = mask(r, c);
        }
        w(k) = samples[k].similarity;
    }

    const MatrixXd Xw = w.asDiagonal() * X;
    MatrixXd A = X.transpose() * Xw;
    for (Eigen::Index i = 1; i <= d; ++i) A(i, i) += l2_ridge;
    const VectorXd b = Xw.transpose() * probabilities;

    const Eigen::LDLT<MatrixXd> solver(A);
    if (solver.info() != Eigen::Success) {
        throw FatalError("surrogate normal equations are singular");
    }
    const VectorXd beta = solver.solve(b);
    if (!beta.allFinite()) throw FatalError("surrogate solve produced non-finite coefficients");

    SurrogateFit fit;
    fit.intercept = beta(0);
    fit.cell_weights.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) fit.cell_weights(r, c) = beta(1 + r * cols + c);
    }

    // Weighted R^2 on the surrogate's own sample set.
    const VectorXd fitted = X * beta;
    const double w_sum = w.sum();
    const double y_bar = w.dot(probabilities) / w_sum;
    const double ss_tot = (w.array() * (probabilities.array() - y_bar).square()).sum();
    const double ss_res = (w.array() * (probabilities - fitted).array().square()).sum();
    fit.fidelity_r2 = ss_tot < 1e-18 ? 1.0 : std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
    return fit;
}

Attribution explain_instance(const nnet::TrainedModel& model,
                             const nnet::ScaledInstance& instance, const MatrixXd& baseline,
                             const Settings& settings) {
    const MatrixXd& x = instance.steps.back();  // the t-1 matrix
    const std::uint64_t seed =
        derive_seed(settings.base_seed,
                    static_cast<std::uint64_t>(days_from_civil(instance.day)));
    const auto samples =
        sample_perturbations(x, settings.n_samples, baseline, seed, settings.kernel_width);

    if (instance.scaler_fingerprint != model.scaler.fingerprint()) {
        throw FatalError("instance was not scaled with this model's scaler");
    }

    // Fan the perturbed matrices through the black box in deterministic order.
    std::vector<std::vector<MatrixXd>> perturbed;
    perturbed.reserve(samples.size());
    for (const auto& s : samples) {
        std::vector<MatrixXd> steps = instance.steps;
        steps.back() = s.x_perturbed;
        perturbed.push_back(std::move(steps));
    }
    std::vector<const std::vector<MatrixXd>*> batch;
    batch.reserve(perturbed.size());
    for (const auto& steps : perturbed) batch.push_back(&steps);
    const VectorXd probabilities = nnet::batch_probabilities(model, batch);

    const SurrogateFit fit = fit_surrogate(samples, probabilities, settings.ridge);

    Attribution a;
    a.day = instance.day;
    a.cell_weights = fit.cell_weights;
    a.intercept = fit.intercept;
    a.fidelity_r2 = fit.fidelity_r2;
    a.predicted = probabilities(0) >= 0.5 ? 1 : 0;  // sample 0 is the unperturbed instance
    a.correct = a.predicted == instance.label;
    return a;
}

ImportanceTable aggregate(const std::vector<Attribution>& attributions, Axis axis,
                          const std::vector<std::string>& column_names) {
    ImportanceTable table;
    table.axis = axis;
    if (axis == Axis::kFeature) {
        table.keys = column_names;
    } else {
        table.keys.assign(feat::row_times().begin(), feat::row_times().end());
    }

    std::size_t n_correct = 0;
    VectorXd sums = VectorXd::Zero(static_cast<Eigen::Index>(table.keys.size()));
    for (const auto& a : attributions) {
        if (!a.correct) continue;
        ++n_correct;
        const MatrixXd abs_w = a.cell_weights.cwiseAbs();
        if (axis == Axis::kFeature) {
            sums += abs_w.colwise().sum().transpose();
        } else {
            sums += abs_w.rowwise().sum();
        }
    }
    if (n_correct == 0) {
        warn("no correct predictions to aggregate; importance table is empty");
        return table;
    }
    table.values = sums / static_cast<double>(n_correct);
    return table;
}

std::vector<SeriesRow> instance_series(const std::vector<Attribution>& attributions) {
    std::vector<SeriesRow> series;
    for (const auto& a : attributions) {
        if (!a.correct) continue;
        SeriesRow row;
        row.day = a.day;
        row.feature_mass = a.cell_weights.cwiseAbs().colwise().sum().transpose();
        series.push_back(std::move(row));
    }
    return series;
}

std::string attribution_to_json_line(const Attribution& a) {
    nlohmann::ordered_json j;
    j["day"] = a.day.to_string();
    j["predicted"] = a.predicted;
    j["correct"] = a.correct;
    j["fidelity_r2"] = a.fidelity_r2;
    auto weights = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < a.cell_weights.rows(); ++r) {
        auto row = nlohmann::ordered_json::array();
        for (Eigen::Index c = 0; c < a.cell_weights.cols(); ++c) {
            row.push_back(a.cell_weights(r, c));
        }
        weights.push_back(std::move(row));
    }
    j["cell_weights"] = std::move(weights);
    return j.dump();
}

void write_attributions_jsonl(const std::vector<Attribution>& attributions,
                              const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FatalError("cannot write " + path);
    for (const auto& a : attributions) out << attribution_to_json_line(a) << '\n';
}

}  // namespace fintwit::explain
