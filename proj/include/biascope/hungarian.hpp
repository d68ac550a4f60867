#pragma once

#include <vector>

#include "biascope/matrix.hpp"

namespace biascope {

struct Assignment {
  std::vector<int> row_to_col;  // -1 when a row is left unmatched
  double total = 0.0;
};

// Maximum-weight one-to-one matching of a rectangular weight matrix
// (Hungarian method with potentials on the zero-padded square matrix).
Assignment max_weight_assignment(const Matrix& weights);

}  // namespace biascope
