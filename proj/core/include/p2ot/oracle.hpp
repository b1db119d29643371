#pragma once

#include <cstddef>

#include "p2ot/solvers.hpp"
#include "p2ot/types.hpp"

// Brute-force reference solvers for desk-scale instances. Nothing here calls
// into the scaling loop or the fast solvers; the update rules are written out
// again from their closed forms so the two paths can check each other.
namespace p2ot::oracle {

enum class Method { kGrid, kBregman };

struct OracleResult {
  // N×(K+1) for P2OT (last column virtual), N×K otherwise. For kP2otGsa the
  // oracle solves the direct problem GSA targets: rows <= 1/N, total mass rho,
  // lambda·KL columns, entropy on Q only.
  TransportPlan plan;
  double objective = 0.0;
  Method method = Method::kBregman;
  std::size_t iterations = 0;
};

inline constexpr std::size_t kMaxBregmanRows = 64;
inline constexpr std::size_t kMaxBregmanCols = 8;
inline constexpr double kBregmanTol = 1e-12;
inline constexpr std::size_t kBregmanMaxIter = 1'000'000;

/// Long-run alternating KL projections (dual block ascent in log-potentials)
/// at tolerance 1e-12 on the log-potentials. Stiff KL columns (lambda >> eps)
/// converge slowly here; keep lambda/eps below about 1e5. Throws oracle-failure when the cap is hit.
OracleResult oracle_bregman(const CostMatrix& cost, Formulation formulation,
                            const SolverConfig& cfg, double sla_upper = kDefaultSlaUpper);

/// Exhaustive search over the grid {0, h, 2h, …} of row masses, h = 1/(N·resolution),
/// keeping only points that satisfy the hard constraints exactly. Requires N·K <= 6
/// and resolution >= 2.
OracleResult oracle_grid(const CostMatrix& cost, Formulation formulation, const SolverConfig& cfg,
                         std::size_t resolution, double sla_upper = kDefaultSlaUpper);

/// <Q,C> + eps·KL(Q | exp(-C/eps)) + soft marginal penalties, all KLs
/// unnormalized. Hard constraints are not charged; see constraint_violation.
/// `plan` is extended (N×(K+1)) for P2OT.
double entropic_objective(const CostMatrix& cost, Formulation formulation,
                          const SolverConfig& cfg, const Matrix& plan);

/// Largest violation of the formulation's hard constraints.
double constraint_violation(const CostMatrix& cost, Formulation formulation,
                            const SolverConfig& cfg, const Matrix& plan,
                            double sla_upper = kDefaultSlaUpper);

/// Drops the virtual column for P2OT; identity otherwise.
Matrix real_part(Formulation formulation, const Matrix& plan);

}  // namespace p2ot::oracle
