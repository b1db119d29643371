#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "p2ot/solvers.hpp"

namespace p2ot::bench {

struct BenchGrid {
  std::vector<std::size_t> sizes;
  std::vector<double> rhos;
};

struct BenchOptions {
  std::size_t k = 100;
  std::size_t repeats = 3;
  SolverConfig solver;
  std::uint64_t seed = 0;
  bool include_failures = false;
  bool parallel = false;
  // Spread of the random logits behind each cost matrix.
  double logit_scale = 1.0;
  double agreement_tol = 1e-4;
};

struct BenchRecord {
  std::string solver;  // "p2ot" or "gsa"
  std::size_t n = 0;
  std::size_t k = 0;
  double rho = 0.0;
  double wall_time = 0.0;  // median seconds
  std::size_t iterations = 0;  // median
  bool converged = false;
  // The two solvers' plans on this cell agree within agreement_tol.
  bool agree = false;
  double max_deviation = 0.0;
};

/// Cost -log P for softmax predictions of N(0, scale^2) logits; deterministic per seed.
CostMatrix random_cost(std::size_t n, std::size_t k, std::uint64_t seed, double logit_scale = 1.0);

/// I.i.d. uniform [0, 1) entries; deterministic per seed.
CostMatrix uniform_cost(std::size_t n, std::size_t k, std::uint64_t seed);

/// Comma-separated positive integers ("1000,10000"); zero or junk -> invalid-input.
std::vector<std::size_t> parse_size_list(std::string_view text);
/// Comma-separated rho values in (0, 1].
std::vector<double> parse_rho_list(std::string_view text);

/// For every (N, rho) cell, times solve_p2ot and solve_p2ot_gsa `repeats`
/// times on the same cost matrix and records medians. Cells sharing N share
/// the matrix. Requires repeats >= 3.
std::vector<BenchRecord> run_bench(const BenchGrid& grid, const BenchOptions& options);

void write_csv(std::ostream& out, const std::vector<BenchRecord>& records);

}  // namespace p2ot::bench
