#include <doctest.h>

#include "p2ot/solvers.hpp"
#include "support.hpp"

using namespace p2ot;

// The virtual-cluster solver and GSA both target the progressive partial
// problem; their plans should coincide.
TEST_SUITE("equivalence") {

TEST_CASE("virtual-cluster real part agrees with GSA on 10x4 instances") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (double rho : {0.2, 0.5, 0.8}) {
      const CostMatrix c = test::random_cost(10, 4, 500 + seed);
      SolverConfig cfg;
      cfg.rho = rho;
      cfg.tol = 1e-8;
      cfg.max_iter = 100000;
      const double gap = test::max_abs_diff(solve_p2ot(c, cfg).plan.values, solve_p2ot_gsa(c, cfg).plan.values);
      CAPTURE(seed);
      CAPTURE(rho);
      CHECK(gap <= 1e-4);
    }
  }
}

}  // TEST_SUITE
