#include "p2ot/types.hpp"

#include <cmath>
#include <string>

#include "p2ot/errors.hpp"

namespace p2ot {

CostMatrix::CostMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw_invalid_input("cost matrix must have at least one row and one column");
  }
  for (Index i = 0; i < values_.rows(); ++i) {
    for (Index j = 0; j < values_.cols(); ++j) {
      const double c = values_(i, j);
      if (!std::isfinite(c) || c < 0.0) {
        throw_invalid_input("cost entry (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") must be finite and nonnegative");
      }
    }
  }
}

CostMatrix CostMatrix::with_zero_column() const {
  Matrix extended(values_.rows(), values_.cols() + 1);
  extended.leftCols(values_.cols()) = values_;
  extended.col(values_.cols()).setZero();
  return CostMatrix(std::move(extended));
}

PredictionMatrix::PredictionMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw_invalid_input("prediction matrix must be non-empty");
  }
  for (Index i = 0; i < values_.rows(); ++i) {
    double sum = 0.0;
    for (Index j = 0; j < values_.cols(); ++j) {
      const double p = values_(i, j);
      if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
        throw_invalid_input("prediction entry (" + std::to_string(i) + ", " +
                            std::to_string(j) + ") outside [0, 1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw_invalid_input("prediction row " + std::to_string(i) + " sums to " +
                          std::to_string(sum) + ", expected 1");
    }
  }
}

Vector MarginalSpec::uniform(Index n, double total) {
  return Vector::Constant(n, total / static_cast<double>(n));
}

void MarginalSpec::validate() const {
  if (row_marginal.size() < 1 || col_target.size() < 1) {
    throw_invalid_config("marginals must be non-empty");
  }
  if ((row_marginal.array() < 0.0).any() || !row_marginal.allFinite()) {
    throw_invalid_config("row marginal must be finite and nonnegative");
  }
  if (std::abs(row_marginal.sum() - 1.0) > 1e-12) {
    throw_invalid_config("row marginal must sum to 1");
  }
  if ((col_target.array() < 0.0).any() || !col_target.allFinite()) {
    throw_invalid_config("column target must be finite and nonnegative");
  }
  if (col_weights.size() != col_target.size()) {
    throw_invalid_config("column weights must match the column target length");
  }
  if ((col_weights.array() <= 0.0).any()) {
    throw_invalid_config("column weights must be positive");
  }
}

}  // namespace p2ot
