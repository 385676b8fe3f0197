#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "dropal/rng.hpp"

namespace dropal::testing {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Stream& s,
                                     double lo = -1.0, double hi = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = s.uniform(lo, hi);
  }
  return m;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, Stream& s, double lo = -1.0, double hi = 1.0) {
  return random_matrix(n, 1, s, lo, hi).col(0);
}

}  // namespace dropal::testing
