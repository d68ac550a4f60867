#pragma once

#include <span>

#include "biascope/matrix.hpp"

// Data-parallel numeric kernels. Each kernel has a serial reference in
// `serial::` and an OpenMP version in `omp::`; both accumulate every output
// entry in the same order, so their results are bit-identical.
namespace biascope::kernels {

// Clamp a requested thread count; 0 means "OpenMP default".
int resolve_threads(int requested);

namespace serial {

// Upper-triangular accumulation of (X - mean)^T (X - mean) / divisor,
// mirrored into a full symmetric d x d matrix.
Matrix covariance(const Matrix& x, std::span<const double> mean, double divisor);

// K(i,j) = exp(-gamma * ||x_i - x_j||^2).
Matrix rbf_gram(const Matrix& x, double gamma);

// out[i] = exp(-gamma * ||x_i - q||^2) for every row x_i.
void rbf_row(const Matrix& x, std::span<const double> q, double gamma, std::span<double> out);

// y = A v for a square A.
void symv(const Matrix& a, std::span<const double> v, std::span<double> y);

}  // namespace serial

namespace omp {

Matrix covariance(const Matrix& x, std::span<const double> mean, double divisor, int threads = 0);
Matrix rbf_gram(const Matrix& x, double gamma, int threads = 0);
void rbf_row(const Matrix& x, std::span<const double> q, double gamma, std::span<double> out,
             int threads = 0);
void symv(const Matrix& a, std::span<const double> v, std::span<double> y, int threads = 0);

}  // namespace omp

double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace biascope::kernels
