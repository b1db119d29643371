#pragma once

#include "p2ot/types.hpp"

namespace p2ot {

inline constexpr double kDefaultPredictionFloor = 1e-30;

/// Gibbs kernel exp(-C/eps). In log-domain mode only `log_values` (= -C/eps)
/// is guaranteed meaningful; `values` may contain underflowed zeros.
struct Kernel {
  Matrix values;
  Matrix log_values;
  bool log_domain = false;

  Index rows() const noexcept { return log_values.rows(); }
  Index cols() const noexcept { return log_values.cols(); }
};

/// Throws invalid-config for eps <= 0 and numeric-underflow when a plain-mode
/// kernel entry rounds to zero.
Kernel kernel_matrix(const CostMatrix& cost, double epsilon, bool log_domain = false);

/// C_ij = -log(max(P_ij, floor)). The floor must lie in (0, 1e-3].
CostMatrix cost_from_predictions(const PredictionMatrix& predictions,
                                 double floor = kDefaultPredictionFloor);

}  // namespace p2ot
