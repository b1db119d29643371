#pragma once

#include <chrono>
#include <cstddef>

#include <Eigen/Dense>

namespace p2ot {

// Row-major so that a sample's row is contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Nonnegative, finite N×K cost; rows are samples, columns are clusters.
class CostMatrix {
 public:
  /// Throws invalid-input on empty, negative or non-finite data.
  explicit CostMatrix(Matrix values);

  const Matrix& values() const noexcept { return values_; }
  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }
  double operator()(Index i, Index j) const { return values_(i, j); }

  /// Same cost with a zero column appended (the virtual cluster).
  CostMatrix with_zero_column() const;

 private:
  Matrix values_;
};

/// Row-stochastic prediction matrix. Zero entries are allowed here and are
/// clamped when converted to a cost.
class PredictionMatrix {
 public:
  static constexpr double kRowSumTolerance = 1e-6;

  explicit PredictionMatrix(Matrix values);

  const Matrix& values() const noexcept { return values_; }
  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }

 private:
  Matrix values_;
};

/// Row marginal, column targets and per-column KL weights.
struct MarginalSpec {
  Vector row_marginal;
  Vector col_target;
  Vector col_weights;

  /// Uniform row marginal 1/N.
  static Vector uniform(Index n, double total = 1.0);

  void validate() const;
};

struct TransportPlan {
  Matrix values;

  double mass() const { return values.sum(); }
  Vector row_sums() const { return values.rowwise().sum(); }
  Vector col_sums() const { return values.colwise().sum().transpose(); }
};

struct ConvergenceReport {
  bool converged = false;
  std::size_t iterations = 0;
  double final_b_change = 0.0;
  std::chrono::duration<double> wall_time{0.0};
};

}  // namespace p2ot
