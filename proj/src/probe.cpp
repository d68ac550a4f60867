#include "biascope/probe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "biascope/base64.hpp"
#include "biascope/error.hpp"
#include "biascope/kernels.hpp"
#include "biascope/random.hpp"

namespace biascope::probe {

namespace {

constexpr double kTau = 1e-12;
constexpr std::size_t kFullGramLimit = 4096;

// Kernel rows for the solver: the whole Gram matrix when it is small enough,
// otherwise two rows recomputed on demand.
class KernelRows {
 public:
  KernelRows(const Matrix& x, double gamma, int threads) : x_(x), gamma_(gamma), threads_(threads) {
    if (x.rows() <= kFullGramLimit) {
      full_ = threads == 1 ? kernels::serial::rbf_gram(x, gamma) : kernels::omp::rbf_gram(x, gamma, threads);
    } else {
      for (auto& b : buf_) b.assign(x.rows(), 0.0);
    }
  }

  std::span<const double> row(std::size_t i, int slot) {
    if (!full_.empty()) return full_.row(i);
    auto& b = buf_[slot];
    if (cached_[slot] != i) {
      if (threads_ == 1)
        kernels::serial::rbf_row(x_, x_.row(i), gamma_, b);
      else
        kernels::omp::rbf_row(x_, x_.row(i), gamma_, b, threads_);
      cached_[slot] = i;
    }
    return b;
  }

 private:
  const Matrix& x_;
  double gamma_;
  int threads_;
  Matrix full_;
  std::vector<double> buf_[2];
  std::size_t cached_[2] = {std::numeric_limits<std::size_t>::max(), std::numeric_limits<std::size_t>::max()};
};

bool row_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

struct Standardizer {
  std::vector<double> mean, scale;

  static Standardizer fit(const Matrix& x) {
    Standardizer s;
    const std::size_t n = x.rows(), d = x.cols();
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < d; ++j) s.mean[j] += x(r, j);
    for (double& m : s.mean) m /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < d; ++j) s.scale[j] += (x(r, j) - s.mean[j]) * (x(r, j) - s.mean[j]);
    for (double& v : s.scale) {
      v = std::sqrt(v / static_cast<double>(n));
      if (v == 0.0) v = 1.0;
    }
    return s;
  }
};

void apply_standardization(std::span<double> x, const std::vector<double>& mean, const std::vector<double>& scale) {
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = (x[j] - mean[j]) / scale[j];
}

}  // namespace

double default_gamma(const Matrix& features) {
  const std::size_t n = features.rows(), d = features.cols();
  if (n == 0 || d == 0) return 1.0;
  double total = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += features(r, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (features(r, j) - mean) * (features(r, j) - mean);
    total += var / static_cast<double>(n);
  }
  const double mean_var = total / static_cast<double>(d);
  return mean_var > 0.0 ? 1.0 / (static_cast<double>(d) * mean_var) : 1.0 / static_cast<double>(d);
}

double ProbeModel::decision(std::span<const double> x) const {
  std::vector<double> q(x.begin(), x.end());
  if (standardize) apply_standardization(q, feature_mean, feature_scale);
  double sum = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i)
    sum += alpha[i] * labels[i] * std::exp(-gamma * kernels::squared_distance(support_vectors.row(i), q));
  return sum + offset;
}

ProbeModel train(const Matrix& features, std::span<const int> labels, const ProbeConfig& config) {
  const std::size_t n = features.rows();
  if (labels.size() != n)
    throw ValidationError("probe: " + std::to_string(labels.size()) + " labels for " + std::to_string(n) + " rows");
  if (n < 2) throw ValidationError("probe: need at least 2 training rows");
  if (!(config.nu > 0.0 && config.nu <= 1.0)) throw ValidationError("probe: nu must lie in (0, 1]");
  if (config.gamma && !(*config.gamma > 0.0)) throw ValidationError("probe: gamma must be positive");
  if (!(config.kkt_tolerance > 0.0) || config.max_passes <= 0)
    throw ValidationError("probe: kkt_tolerance and max_passes must be positive");
  std::size_t n_pos = 0, n_neg = 0;
  for (int y : labels) {
    if (y == kMale)
      ++n_pos;
    else if (y == kFemale)
      ++n_neg;
    else
      throw ValidationError("probe: labels must be +1 or -1");
  }
  if (n_pos == 0 || n_neg == 0) throw ValidationError("probe: training data contains a single class");
  for (double v : features.data())
    if (!std::isfinite(v)) throw ValidationError("probe: non-finite feature value");

  ProbeModel model;
  model.nu = config.nu;
  model.n_train = n;
  model.standardize = config.standardize;

  Matrix x = features;
  if (config.standardize) {
    auto s = Standardizer::fit(x);
    for (std::size_t r = 0; r < n; ++r) apply_standardization(x.row(r), s.mean, s.scale);
    model.feature_mean = std::move(s.mean);
    model.feature_scale = std::move(s.scale);
  }
  model.gamma = config.gamma.value_or(default_gamma(x));
  model.gamma_source = config.gamma ? "user" : "scale_heuristic";

  // Canonical row order (positives first, then lexicographic features) makes
  // the solver trajectory independent of the caller's row order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (labels[a] != labels[b]) return labels[a] > labels[b];
    return row_less(x.row(a), x.row(b));
  });
  Matrix xs = select_rows(x, order);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = labels[order[i]];

  // Scaled dual: a_i = n * alpha_i in [0,1], each class sums to nu*n/2.
  const double half_mass = config.nu * static_cast<double>(n) / 2.0;
  if (half_mass > static_cast<double>(std::min(n_pos, n_neg)) + 1e-12)
    throw ValidationError("probe: nu=" + std::to_string(config.nu) + " is infeasible for class sizes " +
                          std::to_string(n_pos) + "/" + std::to_string(n_neg));
  std::vector<double> a(n, 0.0);
  double remaining[2] = {half_mass, half_mass};
  for (std::size_t i = 0; i < n; ++i) {
    double& r = remaining[y[i] > 0 ? 0 : 1];
    a[i] = std::min(1.0, r);
    r -= a[i];
  }

  KernelRows kr(xs, model.gamma, config.threads);
  std::vector<double> g(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] == 0.0) continue;
    auto ki = kr.row(i, 0);
    for (std::size_t t = 0; t < n; ++t) g[t] += y[t] * y[i] * ki[t] * a[i];
  }

  const std::size_t budget = static_cast<std::size_t>(config.max_passes) * n;
  double best_residual = std::numeric_limits<double>::infinity();
  double residual = 0.0;
  std::size_t iter = 0;
  for (;; ++iter) {
    // Most violating pair per class: raise the coefficient with the smallest
    // gradient (below its bound), lower the one with the largest (above zero).
    std::size_t up[2] = {n, n}, down[2] = {n, n};
    for (std::size_t t = 0; t < n; ++t) {
      const int c = y[t] > 0 ? 0 : 1;
      if (a[t] < 1.0 && (up[c] == n || g[t] < g[up[c]])) up[c] = t;
      if (a[t] > 0.0 && (down[c] == n || g[t] > g[down[c]])) down[c] = t;
    }
    double gap[2];
    for (int c = 0; c < 2; ++c)
      gap[c] = (up[c] < n && down[c] < n) ? g[down[c]] - g[up[c]] : -std::numeric_limits<double>::infinity();
    const int c = gap[0] >= gap[1] ? 0 : 1;
    residual = std::max(0.0, gap[c]);
    best_residual = std::min(best_residual, residual);
    if (residual < config.kkt_tolerance) break;
    if (iter >= budget)
      throw ConvergenceError("probe: no convergence after " + std::to_string(iter) + " updates", best_residual);

    const std::size_t i = up[c], j = down[c];
    auto ki = kr.row(i, 0);
    auto kj = kr.row(j, 1);
    double quad = ki[i] + kj[j] - 2.0 * ki[j];
    if (quad <= 0.0) quad = kTau;
    double step = (g[j] - g[i]) / quad;
    step = std::min({step, 1.0 - a[i], a[j]});
    a[i] += step;
    a[j] -= step;
    if (a[i] > 1.0 - 1e-15) a[i] = std::min(a[i], 1.0);
    if (a[j] < 1e-300) a[j] = std::max(a[j], 0.0);
    for (std::size_t t = 0; t < n; ++t) g[t] += y[t] * (y[i] * ki[t] - y[j] * kj[t]) * step;
  }

  // Per-class multiplier estimates: mean gradient over free coefficients, or
  // the midpoint of the feasible interval when none is free.
  double r[2];
  for (int c = 0; c < 2; ++c) {
    const int sign = c == 0 ? 1 : -1;
    double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] != sign) continue;
      if (a[t] >= 1.0)
        lb = std::max(lb, g[t]);
      else if (a[t] <= 0.0)
        ub = std::min(ub, g[t]);
      else {
        sum_free += g[t];
        ++n_free;
      }
    }
    if (n_free > 0)
      r[c] = sum_free / static_cast<double>(n_free);
    else if (std::isfinite(ub) && std::isfinite(lb))
      r[c] = (ub + lb) / 2.0;
    else
      r[c] = std::isfinite(ub) ? ub : lb;
  }
  const double scale = static_cast<double>(n);
  model.offset = (r[1] - r[0]) / (2.0 * scale);
  model.rho = (r[0] + r[1]) / (2.0 * scale);
  model.kkt_residual = residual;
  model.iterations = iter;

  std::vector<std::size_t> sv;
  for (std::size_t t = 0; t < n; ++t)
    if (a[t] > 0.0) sv.push_back(t);
  model.support_vectors = select_rows(xs, sv);
  for (std::size_t t : sv) {
    model.alpha.push_back(a[t] / scale);
    model.labels.push_back(y[t]);
  }
  return model;
}

Prediction predict(const ProbeModel& model, std::span<const double> x) {
  if (x.size() != model.dim())
    throw DimensionError("probe: input dim " + std::to_string(x.size()) + " != model dim " +
                         std::to_string(model.dim()));
  const double m = model.decision(x);
  return {m >= 0.0 ? kMale : kFemale, m};
}

double dual_objective(const ProbeModel& model) {
  double s = 0.0;
  const std::size_t k = model.alpha.size();
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      const double kij =
          std::exp(-model.gamma * kernels::squared_distance(model.support_vectors.row(i), model.support_vectors.row(j)));
      s += model.alpha[i] * model.alpha[j] * model.labels[i] * model.labels[j] * kij;
    }
  return 0.5 * s;
}

GroupAccuracy evaluate_by_group(const ProbeModel& model, const Matrix& features, std::span<const int> labels,
                                std::span<const Gender> groups) {
  if (labels.size() != features.rows() || groups.size() != features.rows())
    throw ValidationError("probe: features, labels and groups are not aligned");
  std::size_t correct[2] = {0, 0}, count[2] = {0, 0};
  for (std::size_t r = 0; r < features.rows(); ++r) {
    const int g = groups[r] == Gender::Male ? 0 : 1;
    ++count[g];
    if (predict(model, features.row(r)).label == labels[r]) ++correct[g];
  }
  GroupAccuracy acc;
  acc.n_male = count[0];
  acc.n_female = count[1];
  if (count[0]) acc.male = static_cast<double>(correct[0]) / static_cast<double>(count[0]);
  if (count[1]) acc.female = static_cast<double>(correct[1]) / static_cast<double>(count[1]);
  if (count[0] + count[1])
    acc.overall = static_cast<double>(correct[0] + correct[1]) / static_cast<double>(count[0] + count[1]);
  return acc;
}

std::vector<double> default_nu_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 10; ++i) grid.push_back(i / 10.0);
  return grid;
}

Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = m.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Split split_indices(std::size_t n, double heldout_fraction, std::uint64_t seed) {
  if (!(heldout_fraction > 0.0 && heldout_fraction < 1.0))
    throw ValidationError("heldout fraction must lie in (0, 1)");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  rng::Engine eng(seed);
  rng::shuffle(std::span<std::size_t>(idx), eng);
  auto h = static_cast<std::size_t>(std::llround(heldout_fraction * static_cast<double>(n)));
  h = std::clamp<std::size_t>(h, 1, n > 1 ? n - 1 : 1);
  Split s;
  s.heldout.assign(idx.begin(), idx.begin() + static_cast<long>(h));
  s.train.assign(idx.begin() + static_cast<long>(h), idx.end());
  std::sort(s.heldout.begin(), s.heldout.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

TuneResult tune_nu(const Matrix& features, std::span<const int> labels, std::span<const double> grid,
                   double heldout_fraction, std::uint64_t seed, const ProbeConfig& base) {
  if (grid.empty()) throw ValidationError("tune_nu: empty nu grid");
  for (double nu : grid)
    if (!(nu > 0.0 && nu <= 1.0)) throw ValidationError("tune_nu: grid value outside (0, 1]");
  if (labels.size() != features.rows()) throw ValidationError("tune_nu: labels and features are not aligned");

  const Split split = split_indices(features.rows(), heldout_fraction, seed);
  const Matrix train_x = select_rows(features, split.train);
  const Matrix held_x = select_rows(features, split.heldout);
  std::vector<int> train_y, held_y;
  for (auto i : split.train) train_y.push_back(labels[i]);
  for (auto i : split.heldout) held_y.push_back(labels[i]);

  TuneResult result;
  std::optional<std::size_t> best;
  for (double nu : grid) {
    NuTrial trial{nu, std::nullopt, {}};
    try {
      ProbeConfig cfg = base;
      cfg.nu = nu;
      const ProbeModel m = train(train_x, train_y, cfg);
      std::size_t correct = 0;
      for (std::size_t r = 0; r < held_x.rows(); ++r)
        if (predict(m, held_x.row(r)).label == held_y[r]) ++correct;
      trial.heldout_accuracy = static_cast<double>(correct) / static_cast<double>(held_x.rows());
    } catch (const Error& e) {
      trial.error = std::string(e.kind()) + ": " + e.what();
    }
    result.trials.push_back(trial);
    if (!trial.heldout_accuracy) continue;
    const std::size_t idx = result.trials.size() - 1;
    if (!best) {
      best = idx;
      continue;
    }
    const auto& cur = result.trials[*best];
    if (*trial.heldout_accuracy > *cur.heldout_accuracy ||
        (*trial.heldout_accuracy == *cur.heldout_accuracy && nu < cur.nu))
      best = idx;
  }
  if (!best) throw ValidationError("tune_nu: training failed for every grid value");
  result.best = base;
  result.best.nu = result.trials[*best].nu;
  return result;
}

nlohmann::ordered_json to_json(const ProbeModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "biascope-probe";
  j["version"] = 1;
  j["kernel"] = {{"type", "rbf"}, {"gamma", m.gamma}, {"gamma_source", m.gamma_source}};
  j["nu"] = m.nu;
  j["offset"] = m.offset;
  j["rho"] = m.rho;
  j["dim"] = m.dim();
  j["n_train"] = m.n_train;
  j["kkt_residual"] = m.kkt_residual;
  j["iterations"] = m.iterations;
  j["standardize"] = m.standardize;
  if (m.standardize) {
    j["feature_mean"] = base64::encode_doubles(m.feature_mean);
    j["feature_scale"] = base64::encode_doubles(m.feature_scale);
  }
  j["support_vectors"] = {{"count", m.support_vectors.rows()},
                          {"data", base64::encode_doubles(m.support_vectors.data())}};
  j["alpha"] = base64::encode_doubles(m.alpha);
  j["labels"] = m.labels;
  return j;
}

ProbeModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "biascope-probe") throw FormatError("not a probe model");
    if (j.at("version").get<int>() != 1) throw FormatError("unsupported probe model version");
    ProbeModel m;
    m.gamma = j.at("kernel").at("gamma").get<double>();
    m.gamma_source = j.at("kernel").value("gamma_source", std::string("user"));
    m.nu = j.at("nu").get<double>();
    m.offset = j.at("offset").get<double>();
    m.rho = j.at("rho").get<double>();
    m.n_train = j.at("n_train").get<std::size_t>();
    m.kkt_residual = j.at("kkt_residual").get<double>();
    m.iterations = j.at("iterations").get<std::size_t>();
    m.standardize = j.at("standardize").get<bool>();
    const auto dim = j.at("dim").get<std::size_t>();
    const auto count = j.at("support_vectors").at("count").get<std::size_t>();
    auto data = base64::decode_doubles(j.at("support_vectors").at("data").get<std::string>());
    if (data.size() != count * dim) throw FormatError("support vector block has wrong size");
    m.support_vectors = Matrix(count, dim, std::move(data));
    m.alpha = base64::decode_doubles(j.at("alpha").get<std::string>());
    m.labels = j.at("labels").get<std::vector<int>>();
    if (m.alpha.size() != count || m.labels.size() != count) throw FormatError("coefficient count mismatch");
    if (m.standardize) {
      m.feature_mean = base64::decode_doubles(j.at("feature_mean").get<std::string>());
      m.feature_scale = base64::decode_doubles(j.at("feature_scale").get<std::string>());
      if (m.feature_mean.size() != dim || m.feature_scale.size() != dim)
        throw FormatError("standardization vectors have wrong size");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("probe model json: ") + e.what());
  }
}

}  // namespace biascope::probe
