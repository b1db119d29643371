#include <doctest.h>

#include <cmath>

#include "p2ot/bench.hpp"
#include "p2ot/oracle.hpp"
#include "p2ot/solvers.hpp"
#include "support.hpp"

using namespace p2ot;
using test::error_kind;
using test::max_abs_diff;

namespace {

constexpr Formulation kAll[] = {Formulation::kOt,  Formulation::kUot,  Formulation::kPot,
                                Formulation::kSla, Formulation::kP2ot, Formulation::kP2otGsa};

// eps·sum(exp(-C/eps)) is the plan-independent part of the entropic objective.
double kernel_mass(const CostMatrix& c, double eps) {
  return eps * (-c.values().array() / eps).exp().sum();
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("OT on a uniform cost") {
  const CostMatrix c(Matrix::Constant(3, 2, 0.5));
  SolverConfig cfg;
  const oracle::OracleResult r = oracle::oracle_bregman(c, Formulation::kOt, cfg);
  CHECK(r.method == oracle::Method::kBregman);
  CHECK(max_abs_diff(r.plan.values, Matrix::Constant(3, 2, 1.0 / 6)) < 1e-14);
  // <Q,C> + eps·sum(Q log Q - Q) + eps·sum(exp(-C/eps)) for Q = 1/6 everywhere.
  const double q = 1.0 / 6;
  const double expected = 0.5 + cfg.epsilon * 6 * (q * std::log(q) - q) + kernel_mass(c, cfg.epsilon);
  CHECK(r.objective == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("UOT with stiff columns approaches OT") {
  // The gap closes like eps/lambda. Much stiffer columns stall the Bregman
  // iteration on a slow gauge mode, so stop at lambda = 1e3.
  const CostMatrix c = test::random_cost(5, 3, 3);
  SolverConfig cfg;
  const Matrix ot = oracle::oracle_bregman(c, Formulation::kOt, cfg).plan.values;
  cfg.lambda = 1e2;
  const double loose = max_abs_diff(ot, oracle::oracle_bregman(c, Formulation::kUot, cfg).plan.values);
  cfg.lambda = 1e3;
  const double stiff = max_abs_diff(ot, oracle::oracle_bregman(c, Formulation::kUot, cfg).plan.values);
  CHECK(stiff < 1e-4);
  CHECK(stiff < loose / 5);
}

TEST_CASE("oracle plans are feasible to 1e-10") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const CostMatrix c = test::random_cost(6, 3, 100 + seed);
    for (Formulation f : kAll) {
      SolverConfig cfg;
      cfg.rho = 0.5;
      const oracle::OracleResult r = oracle::oracle_bregman(c, f, cfg);
      CAPTURE(to_string(f));
      CHECK(std::isfinite(r.objective));
      CHECK(oracle::constraint_violation(c, f, cfg, r.plan.values) <= 1e-10);
      CHECK(r.plan.values.cols() == (f == Formulation::kP2ot ? 4 : 3));
    }
  }
}

TEST_CASE("fast solvers match the oracle on random 6x3 instances") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const CostMatrix c = test::random_cost(6, 3, 200 + seed);
    for (Formulation f : kAll) {
      for (double rho : {0.3, 0.5, 1.0}) {
        SolverConfig cfg;
        cfg.rho = rho;
        const oracle::OracleResult ref = oracle::oracle_bregman(c, f, cfg);
        const Matrix fast = f == Formulation::kP2ot ? solve_p2ot(c, cfg).extended.plan.values
                                                    : solve(f, c, cfg).plan.values;
        CAPTURE(to_string(f));
        CAPTURE(rho);
        CHECK(max_abs_diff(fast, ref.plan.values) < 1e-4);
        CHECK(oracle::entropic_objective(c, f, cfg, fast) <= ref.objective + 1e-6);
      }
    }
  }
}

TEST_CASE("grid search") {
  SUBCASE("2x2 uniform OT is uniform") {
    const CostMatrix c(Matrix::Zero(2, 2));
    const oracle::OracleResult r = oracle::oracle_grid(c, Formulation::kOt, SolverConfig{}, 10);
    CHECK(r.method == oracle::Method::kGrid);
    CHECK(max_abs_diff(r.plan.values, Matrix::Constant(2, 2, 0.25)) < 1e-12);
  }
  SUBCASE("2x2 P2OT at rho = 0.5 is close to Bregman") {
    const CostMatrix c = test::random_cost(2, 2, 7);
    SolverConfig cfg;
    cfg.rho = 0.5;
    const oracle::OracleResult grid = oracle::oracle_grid(c, Formulation::kP2ot, cfg, 40);
    const oracle::OracleResult breg = oracle::oracle_bregman(c, Formulation::kP2ot, cfg);
    CHECK(std::abs(grid.objective - breg.objective) < 1e-3);
    CHECK(grid.objective >= breg.objective - 1e-9);
  }
  SUBCASE("agrees with Bregman on 2x2 instances for every formulation") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const CostMatrix c = test::random_cost(2, 2, 30 + seed);
      for (Formulation f : kAll) {
        SolverConfig cfg;
        cfg.rho = 0.5;
        const std::size_t resolution = 40;
        const oracle::OracleResult grid = oracle::oracle_grid(c, f, cfg, resolution);
        const oracle::OracleResult breg = oracle::oracle_bregman(c, f, cfg);
        CAPTURE(to_string(f));
        // The grid point nearest the optimum sits within one cell per entry.
        CHECK(max_abs_diff(grid.plan.values, breg.plan.values) <= 2.0 / (2 * resolution));
        CHECK(grid.objective >= breg.objective - 1e-9);
        CHECK(grid.objective - breg.objective < 1e-2);
      }
    }
  }
  SUBCASE("preconditions") {
    const CostMatrix c = test::random_cost(2, 2, 1);
    CHECK(error_kind([&] { oracle::oracle_grid(c, Formulation::kOt, SolverConfig{}, 1); }) ==
          ErrorKind::kInvalidConfig);
    CHECK(error_kind([&] { oracle::oracle_grid(test::random_cost(3, 3, 1), Formulation::kOt, SolverConfig{}, 4); }) ==
          ErrorKind::kInvalidConfig);
    SolverConfig cfg;
    cfg.rho = 0.9;
    CHECK(error_kind([&] { oracle::oracle_grid(c, Formulation::kSla, cfg, 4, 0.1); }) ==
          ErrorKind::kInvalidConfig);
  }
}

TEST_CASE("size limits") {
  CHECK(error_kind([] { oracle::oracle_bregman(test::random_cost(65, 2, 1), Formulation::kOt, SolverConfig{}); }) ==
        ErrorKind::kInvalidConfig);
  CHECK(error_kind([] { oracle::oracle_bregman(test::random_cost(4, 9, 1), Formulation::kOt, SolverConfig{}); }) ==
        ErrorKind::kInvalidConfig);
}

TEST_CASE("a degenerate instance is reported, not passed") {
  // Prediction-style cost where rho/K equals 1/N and one row alone can fill a
  // column; alternating projections crawl and hit the iteration cap.
  const CostMatrix c = bench::random_cost(6, 3, 7);
  SolverConfig cfg;
  cfg.rho = 0.5;
  CHECK(error_kind([&] { oracle::oracle_bregman(c, Formulation::kPot, cfg); }) == ErrorKind::kOracleFailure);
}

TEST_CASE("objective and violation helpers check shapes") {
  const CostMatrix c = test::random_cost(3, 2, 1);
  CHECK(error_kind([&] { oracle::entropic_objective(c, Formulation::kP2ot, SolverConfig{}, Matrix::Zero(3, 2)); }) ==
        ErrorKind::kInvalidInput);
  CHECK(oracle::real_part(Formulation::kP2ot, Matrix::Ones(3, 3)).cols() == 2);
  CHECK(oracle::real_part(Formulation::kOt, Matrix::Ones(3, 3)).cols() == 3);
}

}  // TEST_SUITE
