#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "biascope/embedding_store.hpp"
#include "biascope/matrix.hpp"

namespace biascope {

struct DifferenceRowLabel {
  std::string sentence_id;
  std::size_t token_index;
  std::string surface;
};

// One row per aligned pair: embedding(target, original) - embedding(target, swapped).
struct DifferenceMatrix {
  Matrix rows;
  std::vector<DifferenceRowLabel> labels;
};

DifferenceMatrix difference_matrix(std::span<const AlignedPair> pairs,
                                   const std::map<std::string, std::size_t>& targets);

struct PcaResult {
  Matrix components;                   // k x d, orthonormal rows
  std::vector<double> eigenvalues;     // k, nonincreasing
  std::vector<double> explained_ratio; // eigenvalue / trace(covariance)
  std::vector<double> mean;            // zero vector when not centered
  double total_variance = 0.0;         // trace of the covariance
  bool centered = true;
  std::string method;                  // "jacobi" or "power_deflation"
};

enum class EigenMethod { Auto, Jacobi, PowerDeflation };

struct PcaOptions {
  bool center = true;
  EigenMethod method = EigenMethod::Auto;
  int threads = 1;  // covariance assembly only; the eigensolver is serial
};

// Top-k principal components of the rows. Covariance divisor is n-1 when
// centered and n otherwise. Components are sign-normalized so the
// largest-magnitude coordinate is positive.
PcaResult pca(const Matrix& rows, std::size_t k, const PcaOptions& options = {});
inline PcaResult pca(const DifferenceMatrix& m, std::size_t k, const PcaOptions& options = {}) {
  return pca(m.rows, k, options);
}

// m x j coordinates: components[0..j) . (v - mean)
Matrix project(const Matrix& vectors, const PcaResult& fit, std::size_t j);

// v - sum_{i<j} <v - mean, c_i> c_i
std::vector<double> project_out(std::span<const double> v, const PcaResult& fit, std::size_t j);

// Symmetric eigensolvers over a d x d matrix, exposed for tests and benchmarks.
namespace eigen {

struct Decomposition {
  std::vector<double> values;  // nonincreasing
  Matrix vectors;              // rows are eigenvectors
};

// Full cyclic Jacobi decomposition.
Decomposition jacobi(const Matrix& a);

// Top-k eigenpairs by power iteration with deflation.
Decomposition power_deflation(const Matrix& a, std::size_t k, double tolerance = 1e-12,
                              int max_iterations = 10000);

}  // namespace eigen

}  // namespace biascope
