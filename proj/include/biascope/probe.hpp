#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "biascope/lexicon.hpp"
#include "biascope/matrix.hpp"

namespace biascope::probe {

// Labels: +1 = male, -1 = female.
inline constexpr int kMale = +1;
inline constexpr int kFemale = -1;

struct ProbeConfig {
  double nu = 0.5;
  std::optional<double> gamma;  // RBF width; unset -> 1 / (d * mean coordinate variance)
  double kkt_tolerance = 1e-3;
  int max_passes = 10000;       // iteration budget = max_passes * n
  std::uint64_t seed = 0;
  bool standardize = false;
  int threads = 1;              // Gram matrix assembly only
};

// nu-SVC dual solution. Coefficients are kept in the unscaled box
// 0 <= alpha_i <= 1/n with sum(alpha) = nu and sum(alpha * y) = 0;
// decision(x) = sum alpha_i y_i K(sv_i, x) + offset.
struct ProbeModel {
  Matrix support_vectors;
  std::vector<double> alpha;
  std::vector<int> labels;
  double offset = 0.0;
  double rho = 0.0;
  double gamma = 0.0;
  std::string gamma_source;  // "user" or "scale_heuristic"
  double nu = 0.0;
  std::size_t n_train = 0;
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
  bool standardize = false;
  std::vector<double> feature_mean;   // empty unless standardize
  std::vector<double> feature_scale;

  std::size_t dim() const { return support_vectors.cols(); }
  double decision(std::span<const double> x) const;
};

struct Prediction {
  int label;      // sign(margin), sign(0) = +1
  double margin;  // decision value
};

ProbeModel train(const Matrix& features, std::span<const int> labels, const ProbeConfig& config);
Prediction predict(const ProbeModel& model, std::span<const double> x);

// 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij over the support vectors.
double dual_objective(const ProbeModel& model);

double default_gamma(const Matrix& features);

struct GroupAccuracy {
  std::optional<double> male;    // fraction in [0,1]; absent for an empty group
  std::optional<double> female;
  std::optional<double> overall;
  std::size_t n_male = 0;
  std::size_t n_female = 0;
};

GroupAccuracy evaluate_by_group(const ProbeModel& model, const Matrix& features, std::span<const int> labels,
                                std::span<const Gender> groups);

std::vector<double> default_nu_grid();  // 0.1, 0.2, ..., 1.0

struct NuTrial {
  double nu;
  std::optional<double> heldout_accuracy;
  std::string error;  // set when training failed at this grid point
};

struct TuneResult {
  ProbeConfig best;
  std::vector<NuTrial> trials;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> heldout;
};

// Seeded uniform split; heldout gets round(fraction * n) rows (at least one).
Split split_indices(std::size_t n, double heldout_fraction, std::uint64_t seed);

TuneResult tune_nu(const Matrix& features, std::span<const int> labels, std::span<const double> grid,
                   double heldout_fraction, std::uint64_t seed, const ProbeConfig& base = {});

Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows);

nlohmann::ordered_json to_json(const ProbeModel& model);
ProbeModel model_from_json(const nlohmann::json& j);

}  // namespace biascope::probe
