#pragma once

#include <cstddef>
#include <optional>

#include "p2ot/kernel.hpp"
#include "p2ot/types.hpp"

namespace p2ot {

/// KL proximal operator of a marginal penalty, expressed as the multiplicative
/// scaling prox(z)/z that the scaling loop applies to its a or b vector.
class ProxRule {
 public:
  enum class Kind {
    kEquality,    // x = t
    kWeightedKl,  // x = t^f z^(1-f), f = lambda / (lambda + eps)
    kUpperBound,  // x = min(z, t)
  };

  static ProxRule equality();
  static ProxRule upper_bound();
  static ProxRule weighted_kl(Vector exponents);
  static ProxRule weighted_kl(const Vector& weights, double epsilon);

  Kind kind() const noexcept { return kind_; }
  const Vector& exponents() const noexcept { return exponents_; }

  double scale(Index i, double target, double z) const;
  double log_scale(Index i, double log_target, double log_z) const;

 private:
  ProxRule(Kind kind, Vector exponents) : kind_(kind), exponents_(std::move(exponents)) {}

  Kind kind_;
  Vector exponents_;
};

struct ScalingState {
  Vector a;
  Vector b;
  Vector log_a;
  Vector log_b;
  // Scalar mass factor of the three-block loop; stays 1 otherwise.
  double s = 1.0;
  double log_s = 0.0;
  Vector exponents;
  std::size_t iteration = 0;
  double last_b_change = 0.0;
  bool log_domain = false;
};

struct LoopOptions {
  double tol = 1e-6;
  std::size_t max_iter = 1000;
  // When set, adds the scalar update s <- mass / (a^T M b) after each b update.
  std::optional<double> total_mass;
};

struct ScalingResult {
  ScalingState state;
  ConvergenceReport report;
};

/// Alternates a <- prox_row(sMb)/(sMb), b <- prox_col(sM^T a)/(sM^T a) from
/// b = 1 until max|b_new - b_old| <= tol or the cap is hit. With a mass block
/// the change is measured on s·b. `spec.col_weights` is not read here; the
/// weights are already folded into col_prox.
/// Throws DivergenceError when a or b turn non-finite.
ScalingResult scaling_loop(const Kernel& kernel, const MarginalSpec& spec,
                           const ProxRule& row_prox, const ProxRule& col_prox,
                           const LoopOptions& options);

/// Q = s · diag(a) · M · diag(b).
TransportPlan assemble_plan(const ScalingState& state, const Kernel& kernel);

}  // namespace p2ot
