#include "p2ot/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "p2ot/errors.hpp"

namespace p2ot {

Kernel kernel_matrix(const CostMatrix& cost, double epsilon, bool log_domain) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw_invalid_config("epsilon must be a positive finite number");
  }
  Kernel kernel;
  kernel.log_domain = log_domain;
  kernel.log_values = -cost.values() / epsilon;
  kernel.values = kernel.log_values.array().exp().matrix();
  if (!log_domain) {
    for (Index i = 0; i < kernel.values.rows(); ++i) {
      for (Index j = 0; j < kernel.values.cols(); ++j) {
        // Eigen's exp clamps deep negatives instead of returning 0.
        if (kernel.values(i, j) < std::numeric_limits<double>::min()) {
          throw Error(ErrorKind::kNumericUnderflow,
                      "kernel entry (" + std::to_string(i) + ", " + std::to_string(j) +
                          ") underflows to 0 at epsilon " + std::to_string(epsilon) +
                          "; enable log-domain mode");
        }
      }
    }
  }
  return kernel;
}

CostMatrix cost_from_predictions(const PredictionMatrix& predictions, double floor) {
  if (!(floor > 0.0) || floor > 1e-3) {
    throw_invalid_config("prediction floor must lie in (0, 1e-3]");
  }
  const Matrix& p = predictions.values();
  Matrix cost(p.rows(), p.cols());
  for (Index i = 0; i < p.rows(); ++i) {
    for (Index j = 0; j < p.cols(); ++j) {
      // -log(1) is -0.0; keep the cost a clean +0.
      cost(i, j) = std::max(0.0, -std::log(std::max(p(i, j), floor)));
    }
  }
  return CostMatrix(std::move(cost));
}

}  // namespace p2ot
