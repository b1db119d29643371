#include "p2ot/solvers.hpp"

#include <cmath>
#include <string>

#include "p2ot/errors.hpp"

namespace p2ot {
namespace {

LoopOptions loop_options(const SolverConfig& cfg) {
  LoopOptions options;
  options.tol = cfg.tol;
  options.max_iter = cfg.max_iter;
  return options;
}

MarginalSpec uniform_spec(Index n, Index k, double col_total) {
  MarginalSpec spec;
  spec.row_marginal = MarginalSpec::uniform(n);
  spec.col_target = MarginalSpec::uniform(k, col_total);
  spec.col_weights = Vector::Ones(k);
  return spec;
}

SolveResult run(const CostMatrix& cost, const SolverConfig& cfg, const MarginalSpec& spec,
                const ProxRule& row, const ProxRule& col, const LoopOptions& options) {
  const Kernel kernel = kernel_matrix(cost, cfg.epsilon, cfg.log_domain);
  ScalingResult scaled = scaling_loop(kernel, spec, row, col, options);
  return {assemble_plan(scaled.state, kernel), scaled.report};
}

}  // namespace

void SolverConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw_invalid_config("epsilon must be positive");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw_invalid_config("lambda must be positive");
  if (!(rho > 0.0) || rho > 1.0) throw_invalid_config("rho must lie in (0, 1]");
  if (!(iota > 0.0)) throw_invalid_config("iota must be positive");
  if (!(tol > 0.0)) throw_invalid_config("tolerance must be positive");
  if (max_iter < 1) throw_invalid_config("max_iter must be at least 1");
  if (!(prediction_floor > 0.0) || prediction_floor > 1e-3) {
    throw_invalid_config("prediction floor must lie in (0, 1e-3]");
  }
}

std::string_view to_string(Formulation formulation) {
  switch (formulation) {
    case Formulation::kOt:
      return "ot";
    case Formulation::kUot:
      return "uot";
    case Formulation::kPot:
      return "pot";
    case Formulation::kSla:
      return "sla";
    case Formulation::kP2ot:
      return "p2ot";
    case Formulation::kP2otGsa:
      return "gsa";
  }
  return "unknown";
}

Formulation parse_formulation(std::string_view name) {
  if (name == "ot") return Formulation::kOt;
  if (name == "uot") return Formulation::kUot;
  if (name == "pot") return Formulation::kPot;
  if (name == "sla") return Formulation::kSla;
  if (name == "p2ot") return Formulation::kP2ot;
  if (name == "gsa" || name == "p2ot-gsa") return Formulation::kP2otGsa;
  throw_invalid_config("unknown formulation '" + std::string(name) + "'");
}

SolveResult solve_ot(const CostMatrix& cost, const SolverConfig& cfg) {
  cfg.validate();
  const MarginalSpec spec = uniform_spec(cost.rows(), cost.cols(), 1.0);
  return run(cost, cfg, spec, ProxRule::equality(), ProxRule::equality(), loop_options(cfg));
}

SolveResult solve_uot(const CostMatrix& cost, const SolverConfig& cfg) {
  cfg.validate();
  MarginalSpec spec = uniform_spec(cost.rows(), cost.cols(), 1.0);
  spec.col_weights.setConstant(cfg.lambda);
  return run(cost, cfg, spec, ProxRule::equality(),
             ProxRule::weighted_kl(spec.col_weights, cfg.epsilon), loop_options(cfg));
}

SolveResult solve_pot(const CostMatrix& cost, const SolverConfig& cfg) {
  cfg.validate();
  const MarginalSpec spec = uniform_spec(cost.rows(), cost.cols(), cfg.rho);
  return run(cost, cfg, spec, ProxRule::upper_bound(), ProxRule::equality(), loop_options(cfg));
}

SolveResult solve_sla(const CostMatrix& cost, const SolverConfig& cfg, double b_upper) {
  cfg.validate();
  if (!(b_upper > 0.0)) throw_invalid_config("SLA column bound must be positive");
  if (static_cast<double>(cost.cols()) * b_upper < cfg.rho) {
    throw_invalid_config("SLA infeasible: K * b_upper < rho");
  }
  MarginalSpec spec = uniform_spec(cost.rows(), cost.cols(), 1.0);
  spec.col_target.setConstant(b_upper);
  LoopOptions options = loop_options(cfg);
  options.total_mass = cfg.rho;
  return run(cost, cfg, spec, ProxRule::upper_bound(), ProxRule::upper_bound(), options);
}

P2otResult solve_p2ot(const CostMatrix& cost, const SolverConfig& cfg) {
  cfg.validate();
  const Index k = cost.cols();
  const double virtual_exponent = cfg.iota / (cfg.iota + cfg.epsilon);
  if (virtual_exponent < 1.0 - 1e-6) {
    throw_invalid_config("iota too small: virtual-cluster exponent iota/(iota+eps) < 1 - 1e-6");
  }

  const CostMatrix extended_cost = cost.with_zero_column();
  MarginalSpec spec;
  spec.row_marginal = MarginalSpec::uniform(cost.rows());
  spec.col_target.resize(k + 1);
  spec.col_target.head(k).setConstant(cfg.rho / static_cast<double>(k));
  spec.col_target[k] = 1.0 - cfg.rho;
  spec.col_weights.resize(k + 1);
  spec.col_weights.head(k).setConstant(cfg.lambda);
  spec.col_weights[k] = cfg.iota;

  const Kernel kernel = kernel_matrix(extended_cost, cfg.epsilon, cfg.log_domain);
  ScalingResult scaled =
      scaling_loop(kernel, spec, ProxRule::equality(),
                   ProxRule::weighted_kl(spec.col_weights, cfg.epsilon), loop_options(cfg));

  P2otResult result;
  result.extended.plan = assemble_plan(scaled.state, kernel);
  result.plan.values = result.extended.real_part();
  result.report = scaled.report;
  return result;
}

SolveResult solve_p2ot_gsa(const CostMatrix& cost, const SolverConfig& cfg) {
  cfg.validate();
  MarginalSpec spec = uniform_spec(cost.rows(), cost.cols(), cfg.rho);
  spec.col_weights.setConstant(cfg.lambda);
  LoopOptions options = loop_options(cfg);
  options.total_mass = cfg.rho;
  return run(cost, cfg, spec, ProxRule::upper_bound(),
             ProxRule::weighted_kl(spec.col_weights, cfg.epsilon), options);
}

SolveResult solve(Formulation formulation, const CostMatrix& cost, const SolverConfig& cfg,
                  std::optional<double> sla_upper) {
  switch (formulation) {
    case Formulation::kOt:
      return solve_ot(cost, cfg);
    case Formulation::kUot:
      return solve_uot(cost, cfg);
    case Formulation::kPot:
      return solve_pot(cost, cfg);
    case Formulation::kSla:
      return solve_sla(cost, cfg, sla_upper.value_or(kDefaultSlaUpper));
    case Formulation::kP2ot: {
      P2otResult r = solve_p2ot(cost, cfg);
      return {std::move(r.plan), r.report};
    }
    case Formulation::kP2otGsa:
      return solve_p2ot_gsa(cost, cfg);
  }
  throw_invalid_config("unknown formulation");
}

Vector column_targets(Formulation formulation, Index k, const SolverConfig& cfg,
                      std::optional<double> sla_upper) {
  const double kd = static_cast<double>(k);
  switch (formulation) {
    case Formulation::kOt:
    case Formulation::kUot:
      return Vector::Constant(k, 1.0 / kd);
    case Formulation::kPot:
    case Formulation::kP2ot:
    case Formulation::kP2otGsa:
      return Vector::Constant(k, cfg.rho / kd);
    case Formulation::kSla:
      return Vector::Constant(k, sla_upper.value_or(kDefaultSlaUpper));
  }
  return Vector();
}

}  // namespace p2ot
