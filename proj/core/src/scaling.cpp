#include "p2ot/scaling.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "p2ot/errors.hpp"
#include "p2ot/parallel.hpp"

namespace p2ot {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log-domain values may be -inf (an exact zero) but never +inf or NaN
bool valid_log(double v) { return !std::isnan(v) && v != std::numeric_limits<double>::infinity(); }

double safe_log(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

double b_change(double old_log, double new_log) {
  if (old_log == new_log) return 0.0;
  const double old_b = std::exp(old_log);
  const double new_b = std::exp(new_log);
  if (std::isfinite(old_b) && std::isfinite(new_b)) return std::abs(new_b - old_b);
  return std::abs(new_log - old_log);
}

void check_options(const Kernel& kernel, const MarginalSpec& spec, const LoopOptions& options) {
  if (options.max_iter < 1) throw_invalid_config("max_iter must be at least 1");
  if (!(options.tol > 0.0)) throw_invalid_config("tolerance must be positive");
  if (options.total_mass && !(*options.total_mass > 0.0)) {
    throw_invalid_config("total mass must be positive");
  }
  spec.validate();
  if (spec.row_marginal.size() != kernel.rows() || spec.col_target.size() != kernel.cols()) {
    throw_invalid_config("marginal lengths do not match the kernel shape");
  }
}

}  // namespace

ProxRule ProxRule::equality() { return ProxRule(Kind::kEquality, Vector()); }

ProxRule ProxRule::upper_bound() { return ProxRule(Kind::kUpperBound, Vector()); }

ProxRule ProxRule::weighted_kl(Vector exponents) {
  if ((exponents.array() <= 0.0).any() || (exponents.array() > 1.0).any()) {
    throw_invalid_config("KL exponents must lie in (0, 1]");
  }
  return ProxRule(Kind::kWeightedKl, std::move(exponents));
}

ProxRule ProxRule::weighted_kl(const Vector& weights, double epsilon) {
  if (!(epsilon > 0.0)) throw_invalid_config("epsilon must be positive");
  if ((weights.array() <= 0.0).any()) throw_invalid_config("KL weights must be positive");
  return weighted_kl(Vector((weights.array() / (weights.array() + epsilon)).matrix()));
}

double ProxRule::scale(Index i, double target, double z) const {
  switch (kind_) {
    case Kind::kEquality:
      return target / z;
    case Kind::kWeightedKl:
      return std::pow(target / z, exponents_[i]);
    case Kind::kUpperBound:
      return std::min(target / z, 1.0);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double ProxRule::log_scale(Index i, double log_target, double log_z) const {
  switch (kind_) {
    case Kind::kEquality:
      return log_target - log_z;
    case Kind::kWeightedKl:
      return exponents_[i] * (log_target - log_z);
    case Kind::kUpperBound:
      return std::min(log_target - log_z, 0.0);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

ScalingResult scaling_loop(const Kernel& kernel, const MarginalSpec& spec,
                           const ProxRule& row_prox, const ProxRule& col_prox,
                           const LoopOptions& options) {
  check_options(kernel, spec, options);
  const auto start = std::chrono::steady_clock::now();

  const Index n = kernel.rows();
  const Index k = kernel.cols();
  ScalingResult result;
  ScalingState& st = result.state;
  st.log_domain = kernel.log_domain;
  if (col_prox.kind() == ProxRule::Kind::kWeightedKl) st.exponents = col_prox.exponents();

  st.a = Vector::Ones(n);
  st.b = Vector::Ones(k);
  st.log_a = Vector::Zero(n);
  st.log_b = Vector::Zero(k);

  Vector z(n);
  Vector zt(k);
  Vector next(k);
  double change = std::numeric_limits<double>::infinity();

  if (!kernel.log_domain) {
    for (std::size_t it = 1; it <= options.max_iter; ++it) {
      multiply(kernel.values, st.b, z);
      for (Index i = 0; i < n; ++i) {
        st.a[i] = row_prox.scale(i, spec.row_marginal[i], st.s * z[i]);
        if (!std::isfinite(st.a[i])) {
          throw DivergenceError(it, "row scaling a[" + std::to_string(i) + "] is not finite");
        }
      }
      multiply_transposed(kernel.values, st.a, zt);
      change = 0.0;
      double coupling = 0.0;
      for (Index j = 0; j < k; ++j) {
        const double zj = st.s * zt[j];
        next[j] = col_prox.scale(j, spec.col_target[j], zj);
        if (!std::isfinite(next[j])) {
          throw DivergenceError(it, "column scaling b[" + std::to_string(j) + "] is not finite");
        }
        coupling += next[j] * zt[j];
      }
      const double old_s = st.s;
      if (options.total_mass) {
        // a^T M b with the fresh b, reusing M^T a.
        st.s = *options.total_mass / coupling;
        if (!std::isfinite(st.s) || !(st.s > 0.0)) {
          throw DivergenceError(it, "mass factor s is not finite");
        }
      }
      // With a mass block the column factor is s·b; b alone can sit still at
      // a saturated bound while s keeps moving.
      for (Index j = 0; j < k; ++j) {
        change = std::max(change, std::abs(st.s * next[j] - old_s * st.b[j]));
      }
      st.b.swap(next);
      st.iteration = it;
      if (change <= options.tol) break;
    }
    st.log_a = st.a.unaryExpr([](double v) { return safe_log(v); });
    st.log_b = st.b.unaryExpr([](double v) { return safe_log(v); });
    st.log_s = std::log(st.s);
  } else {
    const Vector log_row = spec.row_marginal.unaryExpr([](double v) { return safe_log(v); });
    const Vector log_col = spec.col_target.unaryExpr([](double v) { return safe_log(v); });
    const double log_mass = options.total_mass ? std::log(*options.total_mass) : 0.0;
    Vector coupling_terms(k);
    for (std::size_t it = 1; it <= options.max_iter; ++it) {
      log_multiply(kernel.log_values, st.log_b, z);
      for (Index i = 0; i < n; ++i) {
        st.log_a[i] = row_prox.log_scale(i, log_row[i], st.log_s + z[i]);
        if (!valid_log(st.log_a[i])) {
          throw DivergenceError(it, "row scaling log a[" + std::to_string(i) + "] is not finite");
        }
      }
      log_multiply_transposed(kernel.log_values, st.log_a, zt);
      change = 0.0;
      for (Index j = 0; j < k; ++j) {
        next[j] = col_prox.log_scale(j, log_col[j], st.log_s + zt[j]);
        if (!valid_log(next[j])) {
          throw DivergenceError(it, "column scaling log b[" + std::to_string(j) + "] is not finite");
        }
        coupling_terms[j] = next[j] + zt[j];
      }
      const double old_log_s = st.log_s;
      if (options.total_mass) {
        const double peak = coupling_terms.maxCoeff();
        const double log_coupling =
            peak + std::log((coupling_terms.array() - peak).exp().sum());
        st.log_s = log_mass - log_coupling;
        if (!std::isfinite(st.log_s)) throw DivergenceError(it, "mass factor s is not finite");
      }
      for (Index j = 0; j < k; ++j) {
        change = std::max(change, b_change(old_log_s + st.log_b[j], st.log_s + next[j]));
      }
      st.log_b.swap(next);
      st.iteration = it;
      if (change <= options.tol) break;
    }
    st.a = st.log_a.array().exp().matrix();
    st.b = st.log_b.array().exp().matrix();
    st.s = std::exp(st.log_s);
  }

  st.last_b_change = change;
  result.report.converged = change <= options.tol;
  result.report.iterations = st.iteration;
  result.report.final_b_change = change;
  result.report.wall_time = std::chrono::steady_clock::now() - start;
  return result;
}

TransportPlan assemble_plan(const ScalingState& state, const Kernel& kernel) {
  TransportPlan plan;
  const Index n = kernel.rows();
  const Index k = kernel.cols();
  plan.values.resize(n, k);
  if (state.log_domain) {
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < k; ++j) {
        plan.values(i, j) =
            std::exp(state.log_s + state.log_a[i] + kernel.log_values(i, j) + state.log_b[j]);
      }
    }
  } else {
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < k; ++j) {
        plan.values(i, j) = state.s * state.a[i] * kernel.values(i, j) * state.b[j];
      }
    }
  }
  return plan;
}

}  // namespace p2ot
