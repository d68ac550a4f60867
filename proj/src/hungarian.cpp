#include "biascope/hungarian.hpp"

#include <algorithm>
#include <limits>

namespace biascope {

Assignment max_weight_assignment(const Matrix& weights) {
  const std::size_t r = weights.rows(), c = weights.cols();
  Assignment out;
  out.row_to_col.assign(r, -1);
  const std::size_t n = std::max(r, c);
  if (n == 0) return out;

  double wmax = 0.0;
  for (double w : weights.data()) wmax = std::max(wmax, w);
  auto cost = [&](std::size_t i, std::size_t j) {
    const double w = (i < r && j < c) ? weights(i, j) : 0.0;
    return wmax - w;
  };

  // 1-indexed potentials formulation; p[j] = row matched to column j.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = p[j] - 1;
    if (i < r && j - 1 < c) {
      out.row_to_col[i] = static_cast<int>(j - 1);
      out.total += weights(i, j - 1);
    }
  }
  return out;
}

}  // namespace biascope
