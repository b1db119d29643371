#include "p2ot/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "p2ot/errors.hpp"

namespace p2ot::oracle {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Rule { kEqual, kCap, kKl };

// Plain nested vectors on purpose: this file shares no numerics with the
// Eigen-based fast path.
struct Problem {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<std::vector<double>> cost;
  std::vector<std::vector<double>> log_kernel;
  double epsilon = 0.0;
  Rule row_rule = Rule::kEqual;
  double row_target = 0.0;
  std::vector<Rule> col_rule;
  std::vector<double> col_target;
  std::vector<double> col_weight;
  bool has_mass = false;
  double mass = 1.0;
};

Problem make_problem(const CostMatrix& cost, Formulation formulation, const SolverConfig& cfg,
                     double sla_upper) {
  cfg.validate();
  Problem p;
  p.n = static_cast<std::size_t>(cost.rows());
  const std::size_t k = static_cast<std::size_t>(cost.cols());
  const bool extended = formulation == Formulation::kP2ot;
  p.m = extended ? k + 1 : k;
  p.epsilon = cfg.epsilon;
  p.cost.assign(p.n, std::vector<double>(p.m, 0.0));
  p.log_kernel.assign(p.n, std::vector<double>(p.m, 0.0));
  for (std::size_t i = 0; i < p.n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      p.cost[i][j] = cost(static_cast<Index>(i), static_cast<Index>(j));
      p.log_kernel[i][j] = -p.cost[i][j] / cfg.epsilon;
    }
  }
  p.row_target = 1.0 / static_cast<double>(p.n);
  p.col_rule.assign(p.m, Rule::kEqual);
  p.col_target.assign(p.m, 0.0);
  p.col_weight.assign(p.m, cfg.lambda);
  const double kd = static_cast<double>(k);

  switch (formulation) {
    case Formulation::kOt:
      p.row_rule = Rule::kEqual;
      std::fill(p.col_target.begin(), p.col_target.end(), 1.0 / kd);
      break;
    case Formulation::kUot:
      p.row_rule = Rule::kEqual;
      std::fill(p.col_rule.begin(), p.col_rule.end(), Rule::kKl);
      std::fill(p.col_target.begin(), p.col_target.end(), 1.0 / kd);
      break;
    case Formulation::kPot:
      p.row_rule = Rule::kCap;
      std::fill(p.col_target.begin(), p.col_target.end(), cfg.rho / kd);
      break;
    case Formulation::kSla:
      if (kd * sla_upper < cfg.rho) throw_invalid_config("SLA infeasible: K * b_upper < rho");
      p.row_rule = Rule::kCap;
      std::fill(p.col_rule.begin(), p.col_rule.end(), Rule::kCap);
      std::fill(p.col_target.begin(), p.col_target.end(), sla_upper);
      p.has_mass = true;
      p.mass = cfg.rho;
      break;
    case Formulation::kP2ot:
      p.row_rule = Rule::kEqual;
      std::fill(p.col_rule.begin(), p.col_rule.end(), Rule::kKl);
      std::fill(p.col_target.begin(), p.col_target.end() - 1, cfg.rho / kd);
      p.col_target[k] = 1.0 - cfg.rho;
      p.col_weight[k] = cfg.iota;
      break;
    case Formulation::kP2otGsa:
      p.row_rule = Rule::kCap;
      std::fill(p.col_rule.begin(), p.col_rule.end(), Rule::kKl);
      std::fill(p.col_target.begin(), p.col_target.end(), cfg.rho / kd);
      p.has_mass = true;
      p.mass = cfg.rho;
      break;
  }
  return p;
}

double log_of(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

// Unnormalized KL(x | t) = x log(x/t) - x + t.
double kl_term(double x, double t) {
  if (x <= 0.0) return t;
  if (t <= 0.0) return kInf;
  return x * std::log(x / t) - x + t;
}

double log_sum_exp(const std::vector<double>& terms) {
  double peak = kNegInf;
  for (double t : terms) peak = std::max(peak, t);
  if (peak == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - peak);
  return peak + std::log(acc);
}

// log of the scaling factor prox(z)/z for one marginal entry, with z = exp(log_z).
double log_prox_ratio(Rule rule, double target, double weight, double epsilon, double log_z) {
  const double log_t = log_of(target);
  switch (rule) {
    case Rule::kEqual:
      return log_t - log_z;
    case Rule::kCap:
      // x = min(z, t)
      return std::min(log_t, log_z) - log_z;
    case Rule::kKl: {
      // x = t^f z^(1-f), f = weight / (weight + eps)
      const double f = weight / (weight + epsilon);
      const double log_x = (log_t == kNegInf) ? kNegInf : f * log_t + (1.0 - f) * log_z;
      return log_x - log_z;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double change(double before, double after) {
  if (before == after) return 0.0;
  return std::abs(after - before);
}

double objective_of(const Problem& p, const std::vector<std::vector<double>>& q) {
  double total = 0.0;
  std::vector<double> col_sum(p.m, 0.0);
  for (std::size_t i = 0; i < p.n; ++i) {
    for (std::size_t j = 0; j < p.m; ++j) {
      const double x = q[i][j];
      const double kernel = std::exp(p.log_kernel[i][j]);
      total += x * p.cost[i][j];
      total += p.epsilon * ((x > 0.0 ? x * std::log(x) : 0.0) - x + kernel);
      col_sum[j] += x;
    }
  }
  for (std::size_t j = 0; j < p.m; ++j) {
    if (p.col_rule[j] == Rule::kKl) total += p.col_weight[j] * kl_term(col_sum[j], p.col_target[j]);
  }
  return total;
}

std::vector<std::vector<double>> to_rows(const Matrix& plan) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(plan.rows()),
                                        std::vector<double>(static_cast<std::size_t>(plan.cols())));
  for (Index i = 0; i < plan.rows(); ++i) {
    for (Index j = 0; j < plan.cols(); ++j) {
      rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = plan(i, j);
    }
  }
  return rows;
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      out(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return out;
}

void check_plan_shape(const Problem& p, const Matrix& plan) {
  if (static_cast<std::size_t>(plan.rows()) != p.n || static_cast<std::size_t>(plan.cols()) != p.m) {
    throw_invalid_input("plan shape does not match the formulation (" + std::to_string(p.n) + "x" +
                        std::to_string(p.m) + " expected)");
  }
}

}  // namespace

double entropic_objective(const CostMatrix& cost, Formulation formulation,
                          const SolverConfig& cfg, const Matrix& plan) {
  const Problem p = make_problem(cost, formulation, cfg, kDefaultSlaUpper);
  check_plan_shape(p, plan);
  return objective_of(p, to_rows(plan));
}

double constraint_violation(const CostMatrix& cost, Formulation formulation,
                            const SolverConfig& cfg, const Matrix& plan, double sla_upper) {
  const Problem p = make_problem(cost, formulation, cfg, sla_upper);
  check_plan_shape(p, plan);
  double worst = 0.0;
  double total = 0.0;
  std::vector<double> col_sum(p.m, 0.0);
  for (std::size_t i = 0; i < p.n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < p.m; ++j) {
      const double x = plan(static_cast<Index>(i), static_cast<Index>(j));
      worst = std::max(worst, -x);
      row += x;
      col_sum[j] += x;
    }
    total += row;
    worst = std::max(worst, p.row_rule == Rule::kEqual ? std::abs(row - p.row_target)
                                                       : row - p.row_target);
  }
  for (std::size_t j = 0; j < p.m; ++j) {
    if (p.col_rule[j] == Rule::kEqual) worst = std::max(worst, std::abs(col_sum[j] - p.col_target[j]));
    if (p.col_rule[j] == Rule::kCap) worst = std::max(worst, col_sum[j] - p.col_target[j]);
  }
  if (p.has_mass) worst = std::max(worst, std::abs(total - p.mass));
  return worst;
}

Matrix real_part(Formulation formulation, const Matrix& plan) {
  if (formulation == Formulation::kP2ot) return plan.leftCols(plan.cols() - 1);
  return plan;
}

OracleResult oracle_bregman(const CostMatrix& cost, Formulation formulation,
                            const SolverConfig& cfg, double sla_upper) {
  if (static_cast<std::size_t>(cost.rows()) > kMaxBregmanRows ||
      static_cast<std::size_t>(cost.cols()) > kMaxBregmanCols) {
    throw_invalid_config("oracle_bregman is limited to N <= 64 and K <= 8");
  }
  const Problem p = make_problem(cost, formulation, cfg, sla_upper);

  // log Q_ij = w + u_i + v_j + log_kernel_ij
  std::vector<double> u(p.n, 0.0);
  std::vector<double> v(p.m, 0.0);
  double w = 0.0;
  std::vector<double> terms;
  std::size_t iterations = 0;
  bool converged = false;

  for (std::size_t it = 1; it <= kBregmanMaxIter; ++it) {
    terms.assign(p.m, 0.0);
    for (std::size_t i = 0; i < p.n; ++i) {
      for (std::size_t j = 0; j < p.m; ++j) terms[j] = v[j] + p.log_kernel[i][j];
      const double log_z = w + log_sum_exp(terms);
      u[i] = log_prox_ratio(p.row_rule, p.row_target, 0.0, p.epsilon, log_z);
    }

    double delta = 0.0;
    terms.assign(p.n, 0.0);
    for (std::size_t j = 0; j < p.m; ++j) {
      for (std::size_t i = 0; i < p.n; ++i) terms[i] = u[i] + p.log_kernel[i][j];
      const double log_z = w + log_sum_exp(terms);
      const double next =
          log_prox_ratio(p.col_rule[j], p.col_target[j], p.col_weight[j], p.epsilon, log_z);
      delta = std::max(delta, change(v[j], next));
      v[j] = next;
    }

    if (p.has_mass) {
      terms.clear();
      for (std::size_t i = 0; i < p.n; ++i) {
        for (std::size_t j = 0; j < p.m; ++j) terms.push_back(u[i] + v[j] + p.log_kernel[i][j]);
      }
      const double next = std::log(p.mass) - log_sum_exp(terms);
      delta = std::max(delta, change(w, next));
      w = next;
    }

    iterations = it;
    if (std::isnan(delta)) break;
    if (delta <= kBregmanTol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw Error(ErrorKind::kOracleFailure, "Bregman oracle did not reach tolerance 1e-12 for " +
                                               std::string(to_string(formulation)));
  }

  std::vector<std::vector<double>> q(p.n, std::vector<double>(p.m, 0.0));
  for (std::size_t i = 0; i < p.n; ++i) {
    for (std::size_t j = 0; j < p.m; ++j) q[i][j] = std::exp(w + u[i] + v[j] + p.log_kernel[i][j]);
  }
  OracleResult result;
  result.objective = objective_of(p, q);
  if (!std::isfinite(result.objective)) {
    throw Error(ErrorKind::kOracleFailure, "Bregman oracle produced a non-finite objective");
  }
  result.plan.values = to_matrix(q);
  result.method = Method::kBregman;
  result.iterations = iterations;
  return result;
}

OracleResult oracle_grid(const CostMatrix& cost, Formulation formulation, const SolverConfig& cfg,
                         std::size_t resolution, double sla_upper) {
  if (resolution < 2) throw_invalid_config("grid resolution must be at least 2");
  if (cost.rows() * cost.cols() > 6) throw_invalid_config("oracle_grid needs N*K <= 6");
  const Problem p = make_problem(cost, formulation, cfg, sla_upper);
  const double unit = 1.0 / (static_cast<double>(p.n) * static_cast<double>(resolution));
  const long res = static_cast<long>(resolution);

  // Every integer composition of one row, in units of h.
  std::vector<std::vector<long>> compositions;
  std::vector<long> current(p.m, 0);
  auto enumerate = [&](auto&& self, std::size_t slot, long remaining) -> void {
    if (slot + 1 == p.m) {
      if (p.row_rule == Rule::kEqual) {
        current[slot] = remaining;
        compositions.push_back(current);
      } else {
        for (long c = 0; c <= remaining; ++c) {
          current[slot] = c;
          compositions.push_back(current);
        }
      }
      return;
    }
    for (long c = 0; c <= remaining; ++c) {
      current[slot] = c;
      self(self, slot + 1, remaining - c);
    }
  };
  enumerate(enumerate, 0, res);

  const double points = std::pow(static_cast<double>(compositions.size()), static_cast<double>(p.n));
  if (points > 2e8) throw_invalid_config("grid too large; lower the resolution");

  // Integer targets for the exact constraints.
  const double scale = static_cast<double>(p.n) * static_cast<double>(resolution);
  auto as_units = [&](double mass, bool must_be_integral) -> long {
    const double u = mass * scale;
    const double rounded = std::round(u);
    if (must_be_integral && std::abs(u - rounded) > 1e-9) {
      throw_invalid_config("grid resolution cannot represent the required marginal exactly");
    }
    return must_be_integral ? static_cast<long>(rounded) : static_cast<long>(std::floor(u + 1e-9));
  };
  std::vector<long> col_units(p.m, 0);
  for (std::size_t j = 0; j < p.m; ++j) {
    if (p.col_rule[j] == Rule::kEqual) col_units[j] = as_units(p.col_target[j], true);
    if (p.col_rule[j] == Rule::kCap) col_units[j] = as_units(p.col_target[j], false);
  }
  const long mass_units = p.has_mass ? as_units(p.mass, true) : 0;

  // Row-separable part of the objective per (row, composition).
  std::vector<std::vector<double>> row_cost(p.n, std::vector<double>(compositions.size(), 0.0));
  for (std::size_t i = 0; i < p.n; ++i) {
    for (std::size_t c = 0; c < compositions.size(); ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < p.m; ++j) {
        const double x = static_cast<double>(compositions[c][j]) * unit;
        acc += x * p.cost[i][j];
        acc += p.epsilon * ((x > 0.0 ? x * std::log(x) : 0.0) - x + std::exp(p.log_kernel[i][j]));
      }
      row_cost[i][c] = acc;
    }
  }

  std::vector<std::size_t> pick(p.n, 0);
  std::vector<std::size_t> best_pick;
  double best = kInf;
  std::vector<long> sums(p.m, 0);
  while (true) {
    std::fill(sums.begin(), sums.end(), 0);
    double value = 0.0;
    for (std::size_t i = 0; i < p.n; ++i) {
      value += row_cost[i][pick[i]];
      for (std::size_t j = 0; j < p.m; ++j) sums[j] += compositions[pick[i]][j];
    }
    bool feasible = true;
    long total = 0;
    for (std::size_t j = 0; j < p.m && feasible; ++j) {
      total += sums[j];
      if (p.col_rule[j] == Rule::kEqual && sums[j] != col_units[j]) feasible = false;
      if (p.col_rule[j] == Rule::kCap && sums[j] > col_units[j]) feasible = false;
    }
    if (feasible && p.has_mass && total != mass_units) feasible = false;
    if (feasible) {
      for (std::size_t j = 0; j < p.m; ++j) {
        if (p.col_rule[j] == Rule::kKl) {
          value += p.col_weight[j] * kl_term(static_cast<double>(sums[j]) * unit, p.col_target[j]);
        }
      }
      if (value < best) {
        best = value;
        best_pick = pick;
      }
    }
    // odometer
    std::size_t slot = 0;
    while (slot < p.n && ++pick[slot] == compositions.size()) pick[slot++] = 0;
    if (slot == p.n) break;
  }

  if (best_pick.empty() || !std::isfinite(best)) {
    throw_invalid_config("no feasible grid point at this resolution");
  }
  std::vector<std::vector<double>> q(p.n, std::vector<double>(p.m, 0.0));
  for (std::size_t i = 0; i < p.n; ++i) {
    for (std::size_t j = 0; j < p.m; ++j) {
      q[i][j] = static_cast<double>(compositions[best_pick[i]][j]) * unit;
    }
  }
  OracleResult result;
  result.plan.values = to_matrix(q);
  result.objective = objective_of(p, q);
  result.method = Method::kGrid;
  return result;
}

}  // namespace p2ot::oracle
