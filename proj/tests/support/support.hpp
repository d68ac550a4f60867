#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "biascope/matrix.hpp"
#include "biascope/random.hpp"

namespace testing {

inline std::filesystem::path fixture(const std::string& rel) {
  return std::filesystem::path(BIASCOPE_FIXTURE_DIR) / rel;
}

// Fresh directory under the system temp dir, removed with the object.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("biascope_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

struct LabeledData {
  biascope::Matrix x;
  std::vector<int> y;
};

// Gender-probe generator: male rows get +2a along e0, female rows a smaller
// and spread-out -a*U(0,2), both with isotropic noise. The male signal has
// twice the magnitude, so male rows are classified more reliably.
inline LabeledData probe_gap_data(std::uint64_t seed, std::size_t n, std::size_t d = 16, double sigma = 0.7,
                                  double a = 1.0) {
  biascope::rng::Engine eng(seed);
  LabeledData out{biascope::Matrix(n, d), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const bool male = i % 2 == 0;
    for (std::size_t j = 0; j < d; ++j) out.x(i, j) = sigma * biascope::rng::normal(eng);
    out.x(i, 0) += male ? 2.0 * a : -a * 2.0 * biascope::rng::uniform01(eng);
    out.y.push_back(male ? 1 : -1);
  }
  return out;
}

// Linearly separable data: uniform points in [-1,1]^d labelled by a fixed
// hyperplane, with a margin band removed.
inline LabeledData separable_data(std::uint64_t seed, std::size_t n, std::size_t d = 5, double margin = 0.2) {
  biascope::rng::Engine eng(seed);
  std::vector<double> w(d);
  for (auto& v : w) v = biascope::rng::normal(eng);
  double norm = 0.0;
  for (double v : w) norm += v * v;
  norm = std::sqrt(norm);
  for (auto& v : w) v /= norm;
  LabeledData out;
  std::vector<double> row(d);
  while (out.y.size() < n) {
    for (auto& v : row) v = 2.0 * biascope::rng::uniform01(eng) - 1.0;
    const double s = biascope::dot(w, row);
    if (std::abs(s) < margin) continue;
    out.x.append_row(row);
    out.y.push_back(s > 0 ? 1 : -1);
  }
  return out;
}

inline biascope::Matrix random_matrix(biascope::rng::Engine& eng, std::size_t r, std::size_t c, double scale = 1.0) {
  biascope::Matrix m(r, c);
  for (auto& v : m.data()) v = scale * biascope::rng::normal(eng);
  return m;
}

// Random orthogonal matrix (Gram-Schmidt on a Gaussian matrix).
inline biascope::Matrix random_rotation(biascope::rng::Engine& eng, std::size_t d) {
  biascope::Matrix q = random_matrix(eng, d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      const double p = biascope::dot(q.row(i), q.row(k));
      for (std::size_t j = 0; j < d; ++j) q(i, j) -= p * q(k, j);
    }
    const double n = std::sqrt(biascope::dot(q.row(i), q.row(i)));
    for (std::size_t j = 0; j < d; ++j) q(i, j) /= n;
  }
  return q;
}

}  // namespace testing
