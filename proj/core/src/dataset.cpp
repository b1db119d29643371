#include "p2ot/dataset.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "p2ot/errors.hpp"

namespace p2ot::sim {
namespace {

bool is_integral(double v) { return std::abs(v - std::round(v)) < 1e-9; }

}  // namespace

std::vector<std::size_t> long_tailed_sizes(std::size_t n, std::size_t k, double ratio) {
  if (k < 1) throw_invalid_config("need at least one class");
  if (!(ratio >= 1.0) || !std::isfinite(ratio)) throw_invalid_config("imbalance ratio must be >= 1");
  if (n < k) throw_invalid_config("need N >= K");
  if (k == 1) {
    if (ratio != 1.0) throw_invalid_config("a single class has ratio 1");
    return {n};
  }

  std::vector<double> weight(k);
  for (std::size_t c = 0; c < k; ++c) {
    weight[c] = std::pow(ratio, static_cast<double>(k - 1 - c) / static_cast<double>(k - 1));
  }
  const double weight_sum = std::accumulate(weight.begin(), weight.end(), 0.0);

  for (auto n_min = static_cast<std::size_t>(std::floor(static_cast<double>(n) / weight_sum));
       n_min >= 1; --n_min) {
    const double top = ratio * static_cast<double>(n_min);
    if (!is_integral(top)) continue;
    const auto n_max = static_cast<std::size_t>(std::llround(top));

    std::vector<std::size_t> sizes(k);
    sizes.front() = n_max;
    sizes.back() = n_min;
    for (std::size_t c = 1; c + 1 < k; ++c) {
      sizes[c] = static_cast<std::size_t>(std::llround(static_cast<double>(n_min) * weight[c]));
    }
    const std::size_t used = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    if (used > n) continue;
    std::size_t remainder = n - used;
    // Spread over the middle classes without crossing n_max.
    for (std::size_t c = 1; remainder > 0 && c + 1 < k; ++c) {
      const std::size_t room = n_max - sizes[c];
      const std::size_t take = std::min(room, remainder);
      sizes[c] += take;
      remainder -= take;
    }
    if (remainder == 0) return sizes;
  }
  throw_invalid_config("cannot split N=" + std::to_string(n) + " into " + std::to_string(k) +
                       " classes with imbalance ratio exactly " + std::to_string(ratio));
}

SyntheticDataset generate_dataset(std::size_t n, std::size_t k, std::size_t dim, double ratio,
                                  std::uint64_t seed, const BlobOptions& options) {
  if (dim < 1) throw_invalid_config("feature dimension must be positive");
  if (!(options.noise > 0.0) || !(options.separation >= 0.0)) {
    throw_invalid_config("blob noise must be positive and separation nonnegative");
  }
  SyntheticDataset data;
  data.class_sizes = long_tailed_sizes(n, k, ratio);
  data.seed = seed;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Matrix centres(static_cast<Index>(k), static_cast<Index>(dim));
  for (Index c = 0; c < centres.rows(); ++c) {
    for (Index j = 0; j < centres.cols(); ++j) centres(c, j) = gauss(rng);
    const double norm = centres.row(c).norm();
    centres.row(c) *= options.separation / (norm > 0.0 ? norm : 1.0);
  }

  data.points.resize(static_cast<Index>(n), static_cast<Index>(dim));
  data.true_labels.reserve(n);
  Index row = 0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t s = 0; s < data.class_sizes[c]; ++s, ++row) {
      for (Index j = 0; j < data.points.cols(); ++j) {
        data.points(row, j) = centres(static_cast<Index>(c), j) + options.noise * gauss(rng);
      }
      data.true_labels.push_back(static_cast<int>(c));
    }
  }
  return data;
}

}  // namespace p2ot::sim
