#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "p2ot/errors.hpp"
#include "p2ot/types.hpp"

namespace p2ot::test {

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed, double lo = 0.0,
                            double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  }
  return m;
}

inline CostMatrix random_cost(Index rows, Index cols, std::uint64_t seed) {
  return CostMatrix(random_matrix(rows, cols, seed));
}

// Kind of the p2ot::Error thrown by fn, or nullopt when it returns normally.
template <typename F>
std::optional<ErrorKind> error_kind(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

}  // namespace p2ot::test
