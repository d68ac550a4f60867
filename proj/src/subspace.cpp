#include "biascope/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "biascope/error.hpp"
#include "biascope/kernels.hpp"

namespace biascope {

DifferenceMatrix difference_matrix(std::span<const AlignedPair> pairs,
                                   const std::map<std::string, std::size_t>& targets) {
  DifferenceMatrix out;
  for (const auto& p : pairs) {
    auto it = targets.find(p.sentence_id);
    if (it == targets.end()) throw ValidationError("no target token for sentence '" + p.sentence_id + "'");
    const std::size_t t = it->second;
    if (t >= p.vectors_a.rows() || t >= p.vectors_b.rows())
      throw RangeError("target " + std::to_string(t) + " outside sentence '" + p.sentence_id + "'");
    if (p.vectors_a.cols() != p.vectors_b.cols())
      throw DimensionError("sentence '" + p.sentence_id + "': dims differ between variants");
    if (!out.labels.empty() && p.vectors_a.cols() != out.rows.cols())
      throw DimensionError("sentence '" + p.sentence_id + "': dim differs from earlier pairs");
    std::vector<double> row(p.vectors_a.cols());
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double a = p.vectors_a(t, j), b = p.vectors_b(t, j);
      if (!std::isfinite(a) || !std::isfinite(b))
        throw ValidationError("sentence '" + p.sentence_id + "' has a non-finite embedding value");
      row[j] = a - b;
    }
    out.rows.append_row(row);
    out.labels.push_back({p.sentence_id, t, p.tokens_a.at(t)});
  }
  return out;
}

namespace eigen {

namespace {

void sign_normalize(std::span<double> v) {
  std::size_t arg = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
  if (v[arg] < 0)
    for (double& x : v) x = -x;
}

// Sorts eigenpairs by value (descending); values within `tie` of each other
// are ordered by their first differing coordinate, larger first.
Decomposition canonical(std::vector<double> values, Matrix vectors, double tie) {
  const std::size_t k = values.size();
  for (std::size_t i = 0; i < k; ++i) sign_normalize(vectors.row(i));
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (std::abs(values[a] - values[b]) > tie) return values[a] > values[b];
    auto va = vectors.row(a), vb = vectors.row(b);
    for (std::size_t j = 0; j < va.size(); ++j)
      if (va[j] != vb[j]) return va[j] > vb[j];
    return false;
  });
  Decomposition out;
  out.vectors = Matrix(k, vectors.cols());
  for (std::size_t i = 0; i < k; ++i) {
    out.values.push_back(values[order[i]]);
    auto src = vectors.row(order[i]);
    std::copy(src.begin(), src.end(), out.vectors.row(i).begin());
  }
  return out;
}

double frobenius2(const Matrix& a) {
  double s = 0.0;
  for (double x : a.data()) s += x * x;
  return s;
}

// Deterministic pseudo-random unit start vector (splitmix64 stream).
std::vector<double> start_vector(std::size_t d, std::uint64_t seed) {
  std::vector<double> v(d);
  std::uint64_t state = 0x9e3779b97f4a7c15ull * (seed + 1);
  for (auto& x : v) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    x = static_cast<double>(z >> 11) * 0x1.0p-53 - 0.5;
  }
  return v;
}

void orthogonalize(std::span<double> x, const std::vector<std::vector<double>>& basis) {
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& b : basis) {
      const double c = dot(x, b);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] -= c * b[i];
    }
}

double norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }

}  // namespace

Decomposition jacobi(const Matrix& input) {
  const std::size_t d = input.rows();
  Matrix a = input;
  Matrix v(d, d);
  for (std::size_t i = 0; i < d; ++i) v(i, i) = 1.0;
  const double total = frobenius2(a);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-32 * total || off == 0.0) break;
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t r = 0; r < d; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p), arq = a(r, q);
          a(r, p) = a(p, r) = c * arp - s * arq;
          a(r, q) = a(q, r) = s * arp + c * arq;
        }
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t r = 0; r < d; ++r) {
          const double vrp = v(r, p), vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
    }
  }
  std::vector<double> values(d);
  Matrix vectors(d, d);
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    values[i] = a(i, i);
    trace += std::abs(a(i, i));
    for (std::size_t r = 0; r < d; ++r) vectors(i, r) = v(r, i);
  }
  return canonical(std::move(values), std::move(vectors), 1e-12 * trace);
}

Decomposition power_deflation(const Matrix& a, std::size_t k, double tolerance, int max_iterations) {
  const std::size_t d = a.rows();
  k = std::min(k, d);
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) trace += std::abs(a(i, i));
  const double floor = std::max(trace, 1e-300) * 1e-15;

  std::vector<std::vector<double>> found;
  std::vector<double> values;
  std::vector<double> y(d);
  std::uint64_t seed = 0;
  double top = 0.0;
  while (found.size() < k) {
    std::vector<double> x = start_vector(d, seed);
    orthogonalize(x, found);
    double nx = norm(x);
    if (nx < 1e-8) {
      ++seed;
      continue;
    }
    for (double& xi : x) xi /= nx;

    double lambda = 0.0;
    for (int it = 0; it < max_iterations; ++it) {
      kernels::serial::symv(a, x, y);
      orthogonalize(y, found);
      const double next = dot(x, y);
      const double ny = norm(y);
      if (ny <= floor) {
        // x lies in the null space of the deflated operator.
        lambda = 0.0;
        break;
      }
      double residual = 0.0;
      for (std::size_t i = 0; i < d; ++i) residual += (y[i] - next * x[i]) * (y[i] - next * x[i]);
      residual = std::sqrt(residual);
      const bool converged = it > 0 && std::abs(next - lambda) <= tolerance * std::max(std::abs(next), floor) &&
                             residual <= std::sqrt(tolerance) * std::max(top, std::abs(next));
      lambda = next;
      for (std::size_t i = 0; i < d; ++i) x[i] = y[i] / ny;
      if (converged) break;
    }
    orthogonalize(x, found);
    nx = norm(x);
    for (double& xi : x) xi /= nx;
    if (found.empty()) top = std::abs(lambda);
    values.push_back(lambda);
    found.push_back(std::move(x));
    ++seed;
  }
  Matrix vectors(found.size(), d);
  for (std::size_t i = 0; i < found.size(); ++i) std::copy(found[i].begin(), found[i].end(), vectors.row(i).begin());
  return canonical(std::move(values), std::move(vectors), 1e-12 * trace);
}

}  // namespace eigen

PcaResult pca(const Matrix& rows, std::size_t k, const PcaOptions& options) {
  const std::size_t n = rows.rows(), d = rows.cols();
  if (n < 2) throw ValidationError("PCA needs at least 2 rows, got " + std::to_string(n));
  if (k < 1 || k > d)
    throw ValidationError("PCA component count " + std::to_string(k) + " outside [1, " + std::to_string(d) + "]");
  for (double x : rows.data())
    if (!std::isfinite(x)) throw ValidationError("PCA input contains a non-finite value");

  PcaResult fit;
  fit.centered = options.center;
  fit.mean.assign(d, 0.0);
  if (options.center) {
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < d; ++j) fit.mean[j] += rows(r, j);
    for (double& m : fit.mean) m /= static_cast<double>(n);
  }
  const double divisor = options.center ? static_cast<double>(n - 1) : static_cast<double>(n);
  const Matrix cov = options.threads == 1 ? kernels::serial::covariance(rows, fit.mean, divisor)
                                          : kernels::omp::covariance(rows, fit.mean, divisor, options.threads);
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) trace += cov(i, i);
  if (trace < 1e-12)
    throw DegeneracyError("total variance " + std::to_string(trace) + " is below 1e-12; PCA is undefined");
  fit.total_variance = trace;

  EigenMethod method = options.method;
  if (method == EigenMethod::Auto) method = (d >= 64 && 8 * k <= d) ? EigenMethod::PowerDeflation : EigenMethod::Jacobi;
  eigen::Decomposition dec;
  if (method == EigenMethod::Jacobi) {
    dec = eigen::jacobi(cov);
    fit.method = "jacobi";
  } else {
    dec = eigen::power_deflation(cov, k);
    fit.method = "power_deflation";
  }
  fit.components = Matrix(k, d);
  for (std::size_t i = 0; i < k; ++i) {
    const double ev = std::max(0.0, dec.values[i]);
    fit.eigenvalues.push_back(ev);
    fit.explained_ratio.push_back(ev / trace);
    auto src = dec.vectors.row(i);
    std::copy(src.begin(), src.end(), fit.components.row(i).begin());
  }
  return fit;
}

Matrix project(const Matrix& vectors, const PcaResult& fit, std::size_t j) {
  if (j > fit.components.rows())
    throw ValidationError("cannot project onto " + std::to_string(j) + " of " +
                          std::to_string(fit.components.rows()) + " components");
  if (vectors.cols() != fit.mean.size())
    throw DimensionError("projection input has dim " + std::to_string(vectors.cols()) + ", PCA dim " +
                         std::to_string(fit.mean.size()));
  Matrix out(vectors.rows(), j);
  std::vector<double> centered(fit.mean.size());
  for (std::size_t r = 0; r < vectors.rows(); ++r) {
    for (std::size_t c = 0; c < centered.size(); ++c) centered[c] = vectors(r, c) - fit.mean[c];
    for (std::size_t i = 0; i < j; ++i) out(r, i) = dot(fit.components.row(i), centered);
  }
  return out;
}

std::vector<double> project_out(std::span<const double> v, const PcaResult& fit, std::size_t j) {
  if (j > fit.components.rows())
    throw ValidationError("cannot remove " + std::to_string(j) + " of " + std::to_string(fit.components.rows()) +
                          " components");
  if (v.size() != fit.mean.size())
    throw DimensionError("vector has dim " + std::to_string(v.size()) + ", PCA dim " + std::to_string(fit.mean.size()));
  std::vector<double> centered(v.size());
  for (std::size_t c = 0; c < v.size(); ++c) centered[c] = v[c] - fit.mean[c];
  std::vector<double> out(v.begin(), v.end());
  for (std::size_t i = 0; i < j; ++i) {
    auto comp = fit.components.row(i);
    const double coef = dot(comp, centered);
    for (std::size_t c = 0; c < v.size(); ++c) out[c] -= coef * comp[c];
  }
  return out;
}

}  // namespace biascope
