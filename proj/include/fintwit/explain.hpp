#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fintwit/datetime.hpp"
#include "fintwit/nnet.hpp"

namespace fintwit::explain {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct PerturbationSample {
    MatrixXd mask;         // 1 = cell kept from the instance
    MatrixXd x_perturbed;  // masked cells replaced by the baseline
    double similarity = 1.0;
};

struct Settings {
    int n_samples = 2000;
    double kernel_width = 0.25;  // on the masked-cell fraction
    double ridge = 1e-3;
    std::uint64_t base_seed = 0;
};

// Independent Bernoulli(0.5) cell masks; sample 0 is the unperturbed
// instance. Fewer samples than cells would leave the surrogate
// underdetermined, so that is fatal.
std::vector<PerturbationSample> sample_perturbations(const MatrixXd& x, int n,
                                                     const MatrixXd& baseline,
                                                     std::uint64_t seed,
                                                     double kernel_width = 0.25);

struct SurrogateFit {
    MatrixXd cell_weights;
    double intercept = 0;
    double fidelity_r2 = 0;
};

// Similarity-weighted ridge regression of the black-box probabilities on
// the binary mask indicators, solved by normal equations. The intercept is
// not penalized.
SurrogateFit fit_surrogate(const std::vector<PerturbationSample>& samples,
                           const VectorXd& probabilities, double l2_ridge);

struct Attribution {
    Date day;
    MatrixXd cell_weights;
    double intercept = 0;
    double fidelity_r2 = 0;
    int predicted = 0;
    bool correct = false;
};

// Perturb -> predict -> fit. The perturbation seed derives from
// (base seed, day) so every instance has its own reproducible stream.
Attribution explain_instance(const nnet::TrainedModel& model,
                             const nnet::ScaledInstance& instance, const MatrixXd& baseline,
                             const Settings& settings);

enum class Axis { kFeature, kTime };

struct ImportanceTable {
    Axis axis = Axis::kFeature;
    std::vector<std::string> keys;
    VectorXd values;  // empty when there are no correct predictions
};

// Mean absolute cell weight over correct predictions, collapsed along the
// complementary axis.
ImportanceTable aggregate(const std::vector<Attribution>& attributions, Axis axis,
                          const std::vector<std::string>& column_names);

struct SeriesRow {
    Date day;
    VectorXd feature_mass;  // per-column sum of |cell weights|
};

// One row per correct prediction, chronological.
std::vector<SeriesRow> instance_series(const std::vector<Attribution>& attributions);

std::string attribution_to_json_line(const Attribution& a);
void write_attributions_jsonl(const std::vector<Attribution>& attributions,
                              const std::string& path);

}  // namespace fintwit::explain
