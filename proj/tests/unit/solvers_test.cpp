#include <doctest.h>

#include <cmath>
#include <vector>

#include "p2ot/oracle.hpp"
#include "p2ot/solvers.hpp"
#include "support.hpp"

using namespace p2ot;
using test::error_kind;
using test::max_abs_diff;

namespace {

SolverConfig tight_config(double rho = 0.5) {
  SolverConfig cfg;
  cfg.rho = rho;
  cfg.tol = 1e-10;
  cfg.max_iter = 200000;
  return cfg;
}

double row_excess(const Matrix& q) {
  const double cap = 1.0 / static_cast<double>(q.rows());
  return (q.rowwise().sum().array() - cap).maxCoeff();
}

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("formulation names round-trip") {
  for (Formulation f : {Formulation::kOt, Formulation::kUot, Formulation::kPot, Formulation::kSla,
                        Formulation::kP2ot, Formulation::kP2otGsa}) {
    CHECK(parse_formulation(to_string(f)) == f);
  }
  CHECK(parse_formulation("p2ot-gsa") == Formulation::kP2otGsa);
  CHECK(error_kind([] { parse_formulation("sinkhorn"); }) == ErrorKind::kInvalidConfig);
}

TEST_CASE("config validation") {
  SolverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.rho = 0.0;
  CHECK(error_kind([&] { cfg.validate(); }) == ErrorKind::kInvalidConfig);
  cfg.rho = 1.2;
  CHECK(error_kind([&] { cfg.validate(); }) == ErrorKind::kInvalidConfig);
  cfg = SolverConfig{};
  cfg.epsilon = -0.1;
  CHECK(error_kind([&] { cfg.validate(); }) == ErrorKind::kInvalidConfig);
  cfg = SolverConfig{};
  cfg.lambda = 0.0;
  CHECK(error_kind([&] { cfg.validate(); }) == ErrorKind::kInvalidConfig);
  cfg = SolverConfig{};
  cfg.max_iter = 0;
  CHECK(error_kind([&] { cfg.validate(); }) == ErrorKind::kInvalidConfig);
}

TEST_CASE("OT") {
  SUBCASE("uniform cost gives the uniform plan") {
    const SolveResult r = solve_ot(CostMatrix(Matrix::Zero(4, 2)), SolverConfig{});
    CHECK(max_abs_diff(r.plan.values, Matrix::Constant(4, 2, 1.0 / 8)) < 1e-12);
  }
  SUBCASE("2x2 anti-diagonal cost concentrates on the diagonal") {
    Matrix c(2, 2);
    c << 0, 1, 1, 0;
    SolverConfig cfg = tight_config();
    cfg.epsilon = 0.05;
    const SolveResult r = solve_ot(CostMatrix(c), cfg);
    // Symmetric fixed point: off/diag = exp(-1/eps), rows sum to 1/2.
    const double off = 0.5 / (1.0 + std::exp(1.0 / cfg.epsilon));
    CHECK(r.plan.values(0, 1) < 1e-4);
    CHECK(r.plan.values(0, 1) == doctest::Approx(off).epsilon(1e-6));
    CHECK(r.plan.values(0, 0) == doctest::Approx(0.5 - off));
  }
  SUBCASE("3x2 marginals") {
    const SolveResult r = solve_ot(test::random_cost(3, 2, 1), tight_config());
    CHECK((r.plan.row_sums().array() - 1.0 / 3).abs().maxCoeff() < 1e-8);
    CHECK((r.plan.col_sums().array() - 0.5).abs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("UOT") {
  SUBCASE("uniform cost gives the uniform plan") {
    const SolveResult r = solve_uot(CostMatrix(Matrix::Constant(5, 3, 0.7)), SolverConfig{});
    CHECK(max_abs_diff(r.plan.values, Matrix::Constant(5, 3, 1.0 / 15)) < 1e-12);
  }
  SUBCASE("large lambda recovers OT") {
    const CostMatrix c = test::random_cost(3, 2, 2);
    SolverConfig cfg = tight_config();
    cfg.lambda = 1e6;
    CHECK(max_abs_diff(solve_uot(c, cfg).plan.values, solve_ot(c, cfg).plan.values) < 1e-5);
  }
  SUBCASE("a favoured column takes more than 1/K") {
    Matrix c = test::random_matrix(4, 2, 3, 0.5, 1.0);
    c.col(0).array() -= 0.4;
    const SolverConfig cfg = tight_config();
    const SolveResult r = solve_uot(CostMatrix(c), cfg);
    CHECK(r.plan.col_sums()[0] > 0.5);
    CHECK(r.plan.mass() == doctest::Approx(1.0).epsilon(1e-9));
    const oracle::OracleResult ref = oracle::oracle_bregman(CostMatrix(c), Formulation::kUot, cfg);
    CHECK(max_abs_diff(r.plan.values, ref.plan.values) < 1e-8);
  }
}

TEST_CASE("POT") {
  SUBCASE("rho = 1 with uniform cost is uniform") {
    const SolveResult r = solve_pot(CostMatrix(Matrix::Zero(4, 2)), tight_config(1.0));
    CHECK(max_abs_diff(r.plan.values, Matrix::Constant(4, 2, 1.0 / 8)) < 1e-9);
  }
  SUBCASE("half the mass goes to the two cheap rows") {
    Matrix c = Matrix::Constant(4, 2, 3.0);
    c.row(0) << 0.1, 0.2;
    c.row(1) << 0.2, 0.1;
    const SolverConfig cfg = tight_config(0.5);
    const SolveResult r = solve_pot(CostMatrix(c), cfg);
    const Vector rows = r.plan.row_sums();
    CHECK(rows[0] == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(rows[1] == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(rows[2] < 1e-6);
    CHECK(rows[3] < 1e-6);
    const oracle::OracleResult ref = oracle::oracle_bregman(CostMatrix(c), Formulation::kPot, cfg);
    CHECK(max_abs_diff(r.plan.values, ref.plan.values) < 1e-8);
  }
  SUBCASE("columns carry rho/K") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      SolverConfig cfg;
      cfg.rho = 0.3;
      const SolveResult r = solve_pot(test::random_cost(10, 4, seed), cfg);
      CHECK((r.plan.col_sums().array() - 0.3 / 4).abs().maxCoeff() < 1e-6);
      CHECK(row_excess(r.plan.values) <= 10 * cfg.tol);
    }
  }
}

TEST_CASE("SLA") {
  SUBCASE("tight column cap coincides with POT") {
    const CostMatrix c = test::random_cost(6, 3, 4);
    const SolverConfig cfg = tight_config(0.6);
    const double cap = cfg.rho / 3;
    CHECK(max_abs_diff(solve_sla(c, cfg, cap).plan.values, solve_pot(c, cfg).plan.values) < 1e-5);
  }
  SUBCASE("rho = 1 with cap 1/K equals POT at rho = 1") {
    const CostMatrix c = test::random_cost(6, 3, 5);
    const SolverConfig cfg = tight_config(1.0);
    CHECK(max_abs_diff(solve_sla(c, cfg, 1.0 / 3).plan.values, solve_pot(c, cfg).plan.values) < 1e-5);
  }
  SUBCASE("small rho with a loose cap piles into one column") {
    Matrix c = test::random_matrix(6, 3, 6, 0.5, 1.0);
    c.col(1).array() -= 0.3;
    const SolverConfig cfg = tight_config(0.05);
    const SolveResult r = solve_sla(CostMatrix(c), cfg, 1.0);
    CHECK(r.plan.col_sums().maxCoeff() >= 0.95 * r.plan.mass());
    CHECK(r.plan.mass() == doctest::Approx(0.05).epsilon(1e-9));
    const oracle::OracleResult ref = oracle::oracle_bregman(CostMatrix(c), Formulation::kSla, cfg, 1.0);
    CHECK(max_abs_diff(r.plan.values, ref.plan.values) < 1e-8);
  }
  SUBCASE("infeasible cap is rejected") {
    SolverConfig cfg;
    cfg.rho = 0.9;
    CHECK(error_kind([&] { solve_sla(test::random_cost(4, 3, 1), cfg, 0.2); }) == ErrorKind::kInvalidConfig);
    CHECK(error_kind([&] { solve_sla(test::random_cost(4, 3, 1), cfg, -1.0); }) == ErrorKind::kInvalidConfig);
  }
}

TEST_CASE("P2OT") {
  SUBCASE("uniform cost spreads rho evenly and parks the rest") {
    for (double rho : {0.2, 0.5, 0.9}) {
      const P2otResult r = solve_p2ot(CostMatrix(Matrix::Constant(6, 3, 0.4)), tight_config(rho));
      CHECK(max_abs_diff(r.plan.values, Matrix::Constant(6, 3, rho / 18)) < 1e-8);
      // iota = 1e6 is a soft stand-in for a hard column: O(eps / iota) slack
      CHECK((r.extended.virtual_column().array() - (1 - rho) / 6).abs().maxCoeff() < 1e-7);
    }
  }
  SUBCASE("rho = 1 collapses to UOT") {
    const CostMatrix c = test::random_cost(8, 3, 7);
    const SolverConfig cfg = tight_config(1.0);
    CHECK(max_abs_diff(solve_p2ot(c, cfg).plan.values, solve_uot(c, cfg).plan.values) < 1e-5);
  }
  SUBCASE("6x3 at rho = 0.5 matches the Bregman oracle") {
    const CostMatrix c = test::random_cost(6, 3, 8);
    SolverConfig cfg;
    cfg.rho = 0.5;
    const P2otResult r = solve_p2ot(c, cfg);
    const oracle::OracleResult ref = oracle::oracle_bregman(c, Formulation::kP2ot, cfg);
    CHECK(max_abs_diff(r.extended.plan.values, ref.plan.values) < 1e-4);
  }
  SUBCASE("extended plan layout") {
    const P2otResult r = solve_p2ot(test::random_cost(5, 4, 9), tight_config(0.4));
    CHECK(r.extended.plan.values.cols() == 5);
    CHECK(r.extended.real_part() == r.plan.values);
    CHECK((r.extended.plan.row_sums().array() - 0.2).abs().maxCoeff() < 1e-9);
  }
  SUBCASE("iota too small is rejected") {
    SolverConfig cfg;
    cfg.iota = 100.0;
    CHECK(error_kind([&] { solve_p2ot(test::random_cost(3, 2, 1), cfg); }) == ErrorKind::kInvalidConfig);
  }
}

TEST_CASE("GSA") {
  SUBCASE("uniform cost") {
    const SolveResult r = solve_p2ot_gsa(CostMatrix(Matrix::Zero(4, 2)), tight_config(0.5));
    CHECK(max_abs_diff(r.plan.values, Matrix::Constant(4, 2, 0.5 / 8)) < 1e-9);
  }
  SUBCASE("matches the oracle for the direct problem") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      for (double rho : {0.3, 0.8}) {
        const CostMatrix c = test::random_cost(6, 3, 40 + seed);
        SolverConfig cfg;
        cfg.rho = rho;
        const oracle::OracleResult ref = oracle::oracle_bregman(c, Formulation::kP2otGsa, cfg);
        CHECK(max_abs_diff(solve_p2ot_gsa(c, cfg).plan.values, ref.plan.values) < 1e-4);
      }
    }
  }
  SUBCASE("agrees with the virtual-cluster solver at rho = 1") {
    const CostMatrix c = test::random_cost(10, 4, 11);
    const SolverConfig cfg = tight_config(1.0);
    CHECK(max_abs_diff(solve_p2ot_gsa(c, cfg).plan.values, solve_p2ot(c, cfg).plan.values) < 1e-5);
  }
  SUBCASE("reports convergence for a bench-sized instance") {
    SolverConfig cfg;
    cfg.rho = 0.95;
    const SolveResult r = solve_p2ot_gsa(test::random_cost(2000, 20, 12), cfg);
    CHECK(r.report.converged);
    CHECK(r.report.iterations > 1);
  }
}

TEST_CASE("mass split across rho") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const CostMatrix c = test::random_cost(20, 5, 60 + seed);
    for (double rho : {0.1, 0.3, 0.5, 0.9, 1.0}) {
      SolverConfig cfg;
      cfg.rho = rho;
      cfg.max_iter = 10000;  // small rho needs over a thousand sweeps
      const P2otResult r = solve_p2ot(c, cfg);
      CAPTURE(seed);
      CAPTURE(rho);
      CAPTURE(r.report.iterations);
      CHECK(r.report.converged);
      CHECK(std::abs(r.plan.mass() - rho) <= 10 * cfg.tol);
      CHECK(std::abs(r.extended.virtual_column().sum() - (1 - rho)) <= 10 * cfg.tol);
      CHECK(row_excess(r.plan.values) <= 10 * cfg.tol);
      CHECK((r.plan.values.array() >= 0).all());

      const SolveResult g = solve_p2ot_gsa(c, cfg);
      CHECK(std::abs(g.plan.mass() - rho) <= 10 * cfg.tol);
      CHECK(row_excess(g.plan.values) <= 10 * cfg.tol);
    }
  }
}

TEST_CASE("declared marginals hold for every solver") {
  const CostMatrix c = test::random_cost(12, 4, 70);
  SolverConfig cfg;
  cfg.rho = 0.4;
  const double tol10 = 10 * cfg.tol;
  for (Formulation f : {Formulation::kOt, Formulation::kUot, Formulation::kPot, Formulation::kSla,
                        Formulation::kP2ot, Formulation::kP2otGsa}) {
    CAPTURE(to_string(f));
    const SolveResult r = solve(f, c, cfg);
    CHECK(r.report.converged);
    CHECK((r.plan.values.array() >= 0).all());
    const Vector rows = r.plan.row_sums();
    if (f == Formulation::kOt || f == Formulation::kUot) {
      CHECK((rows.array() - 1.0 / 12).abs().maxCoeff() <= tol10);
      CHECK(std::abs(r.plan.mass() - 1.0) <= tol10);
    } else {
      CHECK(row_excess(r.plan.values) <= tol10);
      CHECK(std::abs(r.plan.mass() - cfg.rho) <= tol10);
    }
    if (f == Formulation::kOt) CHECK((r.plan.col_sums().array() - 0.25).abs().maxCoeff() <= tol10);
    if (f == Formulation::kPot) CHECK((r.plan.col_sums().array() - 0.1).abs().maxCoeff() <= tol10);
    if (f == Formulation::kSla) CHECK((r.plan.col_sums().array() - kDefaultSlaUpper).maxCoeff() <= tol10);
  }
}

TEST_CASE("limit chain on 8x3 instances") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const CostMatrix c = test::random_cost(8, 3, 80 + seed);
    SolverConfig cfg;
    cfg.rho = 1.0;
    CHECK(max_abs_diff(solve_p2ot(c, cfg).plan.values, solve_uot(c, cfg).plan.values) < 1e-4);
    SolverConfig stiff;
    stiff.lambda = 1e6;
    CHECK(max_abs_diff(solve_uot(c, stiff).plan.values, solve_ot(c, stiff).plan.values) < 1e-4);
    SolverConfig half;
    half.rho = 0.5;
    CHECK(max_abs_diff(solve_sla(c, half, half.rho / 3).plan.values, solve_pot(c, half).plan.values) < 1e-4);
  }
}

TEST_CASE("P2OT output is a local minimum along feasible directions") {
  const CostMatrix c = test::random_cost(6, 3, 90);
  const SolverConfig cfg = tight_config(0.5);
  const Matrix q = solve_p2ot(c, cfg).extended.plan.values;
  const double base = oracle::entropic_objective(c, Formulation::kP2ot, cfg, q);
  // Moving mass within a row keeps every row sum; the virtual column's huge
  // weight makes its KL term the only thing guarding its total.
  for (Index i = 0; i < q.rows(); ++i) {
    for (Index from = 0; from < q.cols(); ++from) {
      for (Index to = 0; to < q.cols(); ++to) {
        if (from == to) continue;
        Matrix moved = q;
        const double step = std::min(1e-3, q(i, from));
        moved(i, from) -= step;
        moved(i, to) += step;
        CHECK(oracle::entropic_objective(c, Formulation::kP2ot, cfg, moved) >= base - 1e-12);
      }
    }
  }
}

TEST_CASE("column targets") {
  SolverConfig cfg;
  cfg.rho = 0.6;
  CHECK(column_targets(Formulation::kOt, 3, cfg).isApprox(Vector::Constant(3, 1.0 / 3)));
  CHECK(column_targets(Formulation::kPot, 3, cfg).isApprox(Vector::Constant(3, 0.2)));
  CHECK(column_targets(Formulation::kP2ot, 3, cfg).isApprox(Vector::Constant(3, 0.2)));
  CHECK(column_targets(Formulation::kSla, 3, cfg, 0.5).isApprox(Vector::Constant(3, 0.5)));
}

}  // TEST_SUITE
