#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "p2ot/kernel.hpp"
#include "p2ot/scaling.hpp"
#include "p2ot/types.hpp"

namespace p2ot {

struct SolverConfig {
  double epsilon = 0.1;
  double lambda = 1.0;
  // Selected-mass fraction; ignored by OT and UOT.
  double rho = 0.1;
  // Virtual-cluster KL weight standing in for lambda_{K+1} -> infinity.
  double iota = 1e6;
  double tol = 1e-6;
  std::size_t max_iter = 1000;
  bool log_domain = false;
  double prediction_floor = kDefaultPredictionFloor;

  void validate() const;
};

enum class Formulation { kOt, kUot, kPot, kSla, kP2ot, kP2otGsa };

std::string_view to_string(Formulation formulation);
/// Accepts ot, uot, pot, sla, p2ot, gsa (alias p2ot-gsa).
Formulation parse_formulation(std::string_view name);

struct SolveResult {
  TransportPlan plan;
  ConvergenceReport report;
};

/// N×(K+1) plan whose last column is the virtual cluster.
struct ExtendedPlan {
  TransportPlan plan;

  Matrix real_part() const { return plan.values.leftCols(plan.values.cols() - 1); }
  Vector virtual_column() const { return plan.values.col(plan.values.cols() - 1); }
};

struct P2otResult {
  TransportPlan plan;
  ExtendedPlan extended;
  ConvergenceReport report;
};

/// Balanced entropic OT: rows 1/N, columns 1/K.
SolveResult solve_ot(const CostMatrix& cost, const SolverConfig& cfg);

/// Rows fixed at 1/N, columns pulled toward 1/K by lambda·KL.
SolveResult solve_uot(const CostMatrix& cost, const SolverConfig& cfg);

/// Rows capped at 1/N, columns fixed at rho/K.
SolveResult solve_pot(const CostMatrix& cost, const SolverConfig& cfg);

/// Rows capped at 1/N, columns capped at b_upper, total mass rho.
/// Throws invalid-config when K·b_upper < rho.
SolveResult solve_sla(const CostMatrix& cost, const SolverConfig& cfg, double b_upper);

/// Progressive partial OT through the virtual-cluster reformulation:
/// cost [C, 0], weights [lambda…, iota], targets [rho/K…, 1 - rho], rows 1/N,
/// and the recursion a <- alpha/(Mb), b <- (beta/(M^T a))^f.
P2otResult solve_p2ot(const CostMatrix& cost, const SolverConfig& cfg);

/// Generalized scaling baseline for the same problem: rows capped at 1/N, KL
/// columns, and an explicit scalar enforcing total mass rho.
SolveResult solve_p2ot_gsa(const CostMatrix& cost, const SolverConfig& cfg);

/// Runs the named formulation; for P2OT the real part is returned.
SolveResult solve(Formulation formulation, const CostMatrix& cost, const SolverConfig& cfg,
                  std::optional<double> sla_upper = std::nullopt);

/// Target column marginal each formulation aims for (a cap for SLA).
Vector column_targets(Formulation formulation, Index k, const SolverConfig& cfg,
                      std::optional<double> sla_upper = std::nullopt);

/// Default SLA column cap used when none is given: a loose bound of 1.
inline constexpr double kDefaultSlaUpper = 1.0;

}  // namespace p2ot
