#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "p2ot/errors.hpp"
#include "p2ot/scaling.hpp"
#include "support.hpp"

using namespace p2ot;
using test::error_kind;

namespace {

Kernel plain_kernel(const Matrix& m) {
  Kernel k;
  k.values = m;
  k.log_values = m.array().log().matrix();
  return k;
}

MarginalSpec balanced(Index n, Index k) {
  MarginalSpec spec;
  spec.row_marginal = MarginalSpec::uniform(n);
  spec.col_target = MarginalSpec::uniform(k);
  spec.col_weights = Vector::Ones(k);
  return spec;
}

LoopOptions tight(double tol = 1e-10) {
  LoopOptions o;
  o.tol = tol;
  o.max_iter = 100000;
  return o;
}

}  // namespace

TEST_SUITE("scaling") {

TEST_CASE("all-ones 2x2 scales to a quarter everywhere") {
  const Kernel m = plain_kernel(Matrix::Ones(2, 2));
  const ScalingResult r =
      scaling_loop(m, balanced(2, 2), ProxRule::equality(), ProxRule::equality(), tight());
  CHECK(r.report.converged);
  const TransportPlan q = assemble_plan(r.state, m);
  CHECK(test::max_abs_diff(q.values, Matrix::Constant(2, 2, 0.25)) < 1e-15);
}

TEST_CASE("loop preconditions") {
  const Kernel m = plain_kernel(Matrix::Ones(2, 2));
  LoopOptions o;
  o.max_iter = 0;
  CHECK(error_kind([&] { scaling_loop(m, balanced(2, 2), ProxRule::equality(), ProxRule::equality(), o); }) ==
        ErrorKind::kInvalidConfig);
  o.max_iter = 10;
  o.tol = 0.0;
  CHECK(error_kind([&] { scaling_loop(m, balanced(2, 2), ProxRule::equality(), ProxRule::equality(), o); }) ==
        ErrorKind::kInvalidConfig);
  CHECK(error_kind([&] { scaling_loop(m, balanced(3, 2), ProxRule::equality(), ProxRule::equality(), tight()); }) ==
        ErrorKind::kInvalidConfig);
}

TEST_CASE("sinkhorn on a random positive 3x3 matches both marginals") {
  const Kernel m = plain_kernel(test::random_matrix(3, 3, 5, 0.05, 1.0));
  const ScalingResult r =
      scaling_loop(m, balanced(3, 3), ProxRule::equality(), ProxRule::equality(), tight());
  CHECK(r.report.converged);
  CHECK(r.report.final_b_change <= 1e-10);
  const TransportPlan q = assemble_plan(r.state, m);
  CHECK((q.row_sums().array() - 1.0 / 3).abs().maxCoeff() < 1e-8);
  CHECK((q.col_sums().array() - 1.0 / 3).abs().maxCoeff() < 1e-8);
}

TEST_CASE("sinkhorn marginals hold within 10 tol across shapes") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Index n = 3 + static_cast<Index>(seed % 5);
    const Index k = 2 + static_cast<Index>(seed % 3);
    const Kernel m = kernel_matrix(test::random_cost(n, k, seed), 0.5);
    const double tol = 1e-7;
    const ScalingResult r =
        scaling_loop(m, balanced(n, k), ProxRule::equality(), ProxRule::equality(), tight(tol));
    REQUIRE(r.report.converged);
    const TransportPlan q = assemble_plan(r.state, m);
    CHECK((q.row_sums().array() - 1.0 / static_cast<double>(n)).abs().maxCoeff() <= 10 * tol);
    CHECK((q.col_sums().array() - 1.0 / static_cast<double>(k)).abs().maxCoeff() <= 10 * tol);
  }
}

TEST_CASE("assemble_plan applies the scalings") {
  const Kernel m = plain_kernel(test::random_matrix(2, 2, 3, 0.1, 1.0));
  ScalingState st;
  st.a = Vector::Ones(2);
  st.b = Vector::Ones(2);
  CHECK(assemble_plan(st, m).values == m.values);

  const Kernel ones = plain_kernel(Matrix::Ones(2, 2));
  st.a << 2.0, 0.5;
  Matrix expected(2, 2);
  expected << 2.0, 2.0, 0.5, 0.5;
  CHECK(assemble_plan(st, ones).values == expected);
}

TEST_CASE("iterates are bit-identical across runs") {
  const Kernel m = kernel_matrix(test::random_cost(7, 3, 9), 0.1);
  MarginalSpec spec = balanced(7, 3);
  const ProxRule col = ProxRule::weighted_kl(Vector::Ones(3), 0.1);
  const ScalingResult a = scaling_loop(m, spec, ProxRule::equality(), col, tight(1e-9));
  const ScalingResult b = scaling_loop(m, spec, ProxRule::equality(), col, tight(1e-9));
  CHECK(a.state.iteration == b.state.iteration);
  CHECK(a.state.a == b.state.a);
  CHECK(a.state.b == b.state.b);
}

TEST_CASE("permuting rows permutes the plan") {
  const Matrix c = test::random_matrix(6, 3, 21);
  std::vector<Index> perm(6);
  std::iota(perm.begin(), perm.end(), 0);
  std::rotate(perm.begin(), perm.begin() + 2, perm.end());
  Matrix permuted(6, 3);
  for (Index i = 0; i < 6; ++i) permuted.row(i) = c.row(perm[static_cast<std::size_t>(i)]);

  const Kernel m1 = kernel_matrix(CostMatrix(c), 0.1);
  const Kernel m2 = kernel_matrix(CostMatrix(permuted), 0.1);
  const ProxRule col = ProxRule::weighted_kl(Vector::Ones(3), 0.1);
  const TransportPlan q1 =
      assemble_plan(scaling_loop(m1, balanced(6, 3), ProxRule::equality(), col, tight()).state, m1);
  const TransportPlan q2 =
      assemble_plan(scaling_loop(m2, balanced(6, 3), ProxRule::equality(), col, tight()).state, m2);
  for (Index i = 0; i < 6; ++i) {
    CHECK((q2.values.row(i) - q1.values.row(perm[static_cast<std::size_t>(i)])).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("log-domain path agrees with the plain path") {
  const CostMatrix cost = test::random_cost(8, 4, 2);
  const Kernel plain = kernel_matrix(cost, 0.1);
  const Kernel logk = kernel_matrix(cost, 0.1, true);
  const ProxRule col = ProxRule::weighted_kl(Vector::Ones(4), 0.1);
  LoopOptions o = tight(1e-9);
  o.total_mass = 0.6;
  const ScalingResult a = scaling_loop(plain, balanced(8, 4), ProxRule::upper_bound(), col, o);
  const ScalingResult b = scaling_loop(logk, balanced(8, 4), ProxRule::upper_bound(), col, o);
  CHECK(test::max_abs_diff(assemble_plan(a.state, plain).values, assemble_plan(b.state, logk).values) < 1e-10);
}

TEST_CASE("log-domain handles costs that underflow the plain kernel") {
  Matrix c = test::random_matrix(4, 3, 8);
  c(0, 0) = 200.0;
  const Kernel logk = kernel_matrix(CostMatrix(c), 0.1, true);
  const ScalingResult r =
      scaling_loop(logk, balanced(4, 3), ProxRule::equality(), ProxRule::equality(), tight(1e-9));
  CHECK(r.report.converged);
  const TransportPlan q = assemble_plan(r.state, logk);
  CHECK(q.values.allFinite());
  CHECK((q.row_sums().array() - 0.25).abs().maxCoeff() < 1e-8);
}

TEST_CASE("mass block stops on s·b, not on a saturated b") {
  // A loose column cap keeps b at 1 from the first sweep; s still has to settle.
  const Kernel m = kernel_matrix(test::random_cost(6, 3, 4), 0.1);
  MarginalSpec spec = balanced(6, 3);
  spec.col_target.setConstant(1.0);
  LoopOptions o = tight(1e-9);
  o.total_mass = 0.3;
  const ScalingResult r = scaling_loop(m, spec, ProxRule::upper_bound(), ProxRule::upper_bound(), o);
  CHECK(r.report.converged);
  CHECK(r.state.iteration > 2);
  CHECK(assemble_plan(r.state, m).mass() == doctest::Approx(0.3).epsilon(1e-9));
  CHECK((assemble_plan(r.state, m).row_sums().array() <= 1.0 / 6 + 1e-9).all());
}

TEST_CASE("a zero kernel row diverges with the iteration index") {
  Matrix values = Matrix::Ones(3, 2);
  values.row(1).setZero();
  Kernel m;
  m.values = values;
  m.log_values = values.array().log().matrix();
  try {
    scaling_loop(m, balanced(3, 2), ProxRule::equality(), ProxRule::equality(), tight());
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.kind() == ErrorKind::kDivergence);
    CHECK(e.iteration() == 1);
  }
}

TEST_CASE("prox rules") {
  CHECK(ProxRule::equality().scale(0, 0.2, 0.4) == doctest::Approx(0.5));
  CHECK(ProxRule::upper_bound().scale(0, 0.2, 0.4) == doctest::Approx(0.5));
  CHECK(ProxRule::upper_bound().scale(0, 0.8, 0.4) == 1.0);
  Vector f(1);
  f << 0.5;
  CHECK(ProxRule::weighted_kl(f).scale(0, 0.25, 1.0) == doctest::Approx(0.5));
  const ProxRule kl = ProxRule::weighted_kl(Vector::Constant(2, 1.0), 0.1);
  CHECK(kl.exponents()[1] == doctest::Approx(1.0 / 1.1));
  CHECK(error_kind([] { ProxRule::weighted_kl(Vector::Constant(1, 0.0)); }) == ErrorKind::kInvalidConfig);
  CHECK(error_kind([] { ProxRule::weighted_kl(Vector::Constant(1, -1.0), 0.1); }) == ErrorKind::kInvalidConfig);
}

}  // TEST_SUITE
