#include "biascope/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

namespace biascope::kernels {

int resolve_threads(int requested) {
  if (requested <= 0) return std::max(1, omp_get_max_threads());
  return requested;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

namespace {

Matrix centered(const Matrix& x, std::span<const double> mean) {
  Matrix c(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < x.cols(); ++j) c(r, j) = x(r, j) - mean[j];
  return c;
}

// Column-oriented copy so the per-entry reduction over rows is contiguous.
Matrix transposed(const Matrix& x) {
  Matrix t(x.cols(), x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < x.cols(); ++j) t(j, r) = x(r, j);
  return t;
}

double covariance_entry(const Matrix& ct, std::size_t i, std::size_t j) {
  auto a = ct.row(i);
  auto b = ct.row(j);
  double s = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r) s += a[r] * b[r];
  return s;
}

void mirror(Matrix& c) {
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j) c(i, j) = c(j, i);
}

}  // namespace

namespace serial {

Matrix covariance(const Matrix& x, std::span<const double> mean, double divisor) {
  const std::size_t d = x.cols();
  const Matrix ct = transposed(centered(x, mean));
  Matrix c(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) c(i, j) = covariance_entry(ct, i, j) / divisor;
  mirror(c);
  return c;
}

Matrix rbf_gram(const Matrix& x, double gamma) {
  const std::size_t n = x.rows();
  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j)
      k(i, j) = std::exp(-gamma * squared_distance(x.row(i), x.row(j)));
  }
  mirror(k);
  return k;
}

void rbf_row(const Matrix& x, std::span<const double> q, double gamma, std::span<double> out) {
  for (std::size_t i = 0; i < x.rows(); ++i)
    out[i] = std::exp(-gamma * squared_distance(x.row(i), q));
}

void symv(const Matrix& a, std::span<const double> v, std::span<double> y) {
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), v);
}

}  // namespace serial

namespace omp {

Matrix covariance(const Matrix& x, std::span<const double> mean, double divisor, int threads) {
  const std::size_t d = x.cols();
  const Matrix ct = transposed(centered(x, mean));
  Matrix c(d, d);
  const long long dd = static_cast<long long>(d);
#pragma omp parallel for schedule(dynamic, 4) num_threads(resolve_threads(threads))
  for (long long i = 0; i < dd; ++i)
    for (std::size_t j = static_cast<std::size_t>(i); j < d; ++j)
      c(i, j) = covariance_entry(ct, static_cast<std::size_t>(i), j) / divisor;
  mirror(c);
  return c;
}

Matrix rbf_gram(const Matrix& x, double gamma, int threads) {
  const std::size_t n = x.rows();
  Matrix k(n, n);
  const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 8) num_threads(resolve_threads(threads))
  for (long long i = 0; i < nn; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    k(ui, ui) = 1.0;
    for (std::size_t j = ui + 1; j < n; ++j)
      k(ui, j) = std::exp(-gamma * squared_distance(x.row(ui), x.row(j)));
  }
  mirror(k);
  return k;
}

void rbf_row(const Matrix& x, std::span<const double> q, double gamma, std::span<double> out,
             int threads) {
  const long long n = static_cast<long long>(x.rows());
#pragma omp parallel for schedule(static) num_threads(resolve_threads(threads))
  for (long long i = 0; i < n; ++i)
    out[i] = std::exp(-gamma * squared_distance(x.row(static_cast<std::size_t>(i)), q));
}

void symv(const Matrix& a, std::span<const double> v, std::span<double> y, int threads) {
  const long long n = static_cast<long long>(a.rows());
#pragma omp parallel for schedule(static) num_threads(resolve_threads(threads))
  for (long long i = 0; i < n; ++i) y[i] = dot(a.row(static_cast<std::size_t>(i)), v);
}

}  // namespace omp

}  // namespace biascope::kernels
