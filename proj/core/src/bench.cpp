#include "p2ot/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <future>
#include <iomanip>
#include <random>

#include "p2ot/errors.hpp"

namespace p2ot::bench {
namespace {

template <typename T>
T median(std::vector<T> values) {
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return static_cast<T>((values[mid - 1] + values[mid]) / 2);
}

std::vector<std::string_view> split(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::size_t stop = comma == std::string_view::npos ? text.size() : comma;
    parts.push_back(text.substr(start, stop - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

struct CellOutcome {
  std::vector<BenchRecord> records;
};

CellOutcome run_cell(std::size_t n, double rho, const BenchOptions& options) {
  const CostMatrix cost = random_cost(n, options.k, options.seed + n, options.logit_scale);
  SolverConfig cfg = options.solver;
  cfg.rho = rho;

  std::vector<double> times_p2ot;
  std::vector<double> times_gsa;
  std::vector<std::size_t> iters_p2ot;
  std::vector<std::size_t> iters_gsa;
  bool converged_p2ot = true;
  bool converged_gsa = true;
  Matrix plan_p2ot;
  Matrix plan_gsa;
  for (std::size_t r = 0; r < options.repeats; ++r) {
    // Alternate the order so neither solver always runs on a warm cache.
    auto run_p2ot = [&] {
      const P2otResult res = solve_p2ot(cost, cfg);
      times_p2ot.push_back(res.report.wall_time.count());
      iters_p2ot.push_back(res.report.iterations);
      converged_p2ot = converged_p2ot && res.report.converged;
      plan_p2ot = res.plan.values;
    };
    auto run_gsa = [&] {
      const SolveResult res = solve_p2ot_gsa(cost, cfg);
      times_gsa.push_back(res.report.wall_time.count());
      iters_gsa.push_back(res.report.iterations);
      converged_gsa = converged_gsa && res.report.converged;
      plan_gsa = res.plan.values;
    };
    if (r % 2 == 0) {
      run_p2ot();
      run_gsa();
    } else {
      run_gsa();
      run_p2ot();
    }
  }
  const double deviation = (plan_p2ot - plan_gsa).cwiseAbs().maxCoeff();
  const bool agree = deviation <= options.agreement_tol;

  CellOutcome out;
  auto make = [&](const char* name, const std::vector<double>& times,
                  const std::vector<std::size_t>& iters, bool converged) {
    BenchRecord rec;
    rec.solver = name;
    rec.n = n;
    rec.k = options.k;
    rec.rho = rho;
    rec.wall_time = median(times);
    rec.iterations = median(iters);
    rec.converged = converged;
    rec.agree = agree;
    rec.max_deviation = deviation;
    if (converged || options.include_failures) out.records.push_back(rec);
  };
  make("p2ot", times_p2ot, iters_p2ot, converged_p2ot);
  make("gsa", times_gsa, iters_gsa, converged_gsa);
  return out;
}

}  // namespace

CostMatrix random_cost(std::size_t n, std::size_t k, std::uint64_t seed, double logit_scale) {
  if (n == 0 || k == 0) throw_invalid_config("cost matrix needs N >= 1 and K >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, logit_scale);
  Matrix cost(static_cast<Index>(n), static_cast<Index>(k));
  for (Index i = 0; i < cost.rows(); ++i) {
    for (Index j = 0; j < cost.cols(); ++j) cost(i, j) = gauss(rng);
    // -log softmax(l)_j = logsumexp(l) - l_j
    const double peak = cost.row(i).maxCoeff();
    const double lse = peak + std::log((cost.row(i).array() - peak).exp().sum());
    cost.row(i) = (lse - cost.row(i).array()).cwiseMax(0.0).matrix();
  }
  return CostMatrix(std::move(cost));
}

CostMatrix uniform_cost(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (n == 0 || k == 0) throw_invalid_config("cost matrix needs N >= 1 and K >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix cost(static_cast<Index>(n), static_cast<Index>(k));
  for (Index i = 0; i < cost.rows(); ++i) {
    for (Index j = 0; j < cost.cols(); ++j) cost(i, j) = unit(rng);
  }
  return CostMatrix(std::move(cost));
}

std::vector<std::size_t> parse_size_list(std::string_view text) {
  std::vector<std::size_t> sizes;
  for (std::string_view part : split(text)) {
    std::size_t value = 0;
    double as_double = 0.0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc() || ptr != part.data() + part.size()) {
      // accept 1e4-style sizes
      const auto [dptr, dec] = std::from_chars(part.data(), part.data() + part.size(), as_double);
      if (dec != std::errc() || dptr != part.data() + part.size() || as_double != std::floor(as_double) ||
          as_double < 0.0) {
        throw_invalid_input("bad size '" + std::string(part) + "' in grid");
      }
      value = static_cast<std::size_t>(as_double);
    }
    if (value == 0) throw_invalid_input("grid sizes must be positive");
    sizes.push_back(value);
  }
  return sizes;
}

std::vector<double> parse_rho_list(std::string_view text) {
  std::vector<double> rhos;
  for (std::string_view part : split(text)) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc() || ptr != part.data() + part.size()) {
      throw_invalid_input("bad rho '" + std::string(part) + "' in grid");
    }
    if (!(value > 0.0) || value > 1.0) throw_invalid_input("grid rho must lie in (0, 1]");
    rhos.push_back(value);
  }
  return rhos;
}

std::vector<BenchRecord> run_bench(const BenchGrid& grid, const BenchOptions& options) {
  if (options.repeats < 3) throw_invalid_config("bench needs at least 3 repeats");
  if (grid.sizes.empty() || grid.rhos.empty()) throw_invalid_config("bench grid is empty");
  for (std::size_t n : grid.sizes) {
    if (n == 0) throw_invalid_input("grid sizes must be positive");
  }
  options.solver.validate();

  std::vector<BenchRecord> records;
  if (options.parallel) {
    std::vector<std::future<CellOutcome>> cells;
    for (std::size_t n : grid.sizes) {
      for (double rho : grid.rhos) {
        cells.push_back(std::async(std::launch::async, run_cell, n, rho, std::cref(options)));
      }
    }
    for (auto& cell : cells) {
      CellOutcome out = cell.get();
      records.insert(records.end(), out.records.begin(), out.records.end());
    }
  } else {
    for (std::size_t n : grid.sizes) {
      for (double rho : grid.rhos) {
        CellOutcome out = run_cell(n, rho, options);
        records.insert(records.end(), out.records.begin(), out.records.end());
      }
    }
  }
  return records;
}

void write_csv(std::ostream& out, const std::vector<BenchRecord>& records) {
  out << "solver,N,K,rho,wall_time_s,iterations,converged,agree,max_deviation\n";
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(9);
  for (const BenchRecord& r : records) {
    out << r.solver << ',' << r.n << ',' << r.k << ',' << r.rho << ',' << r.wall_time << ','
        << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << (r.agree ? 1 : 0) << ','
        << r.max_deviation << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace p2ot::bench
