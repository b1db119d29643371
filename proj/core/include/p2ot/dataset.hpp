#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "p2ot/types.hpp"

namespace p2ot::sim {

struct BlobOptions {
  // Distance of each blob centre from the origin.
  double separation = 4.0;
  double noise = 1.0;
};

struct SyntheticDataset {
  Matrix points;  // N×d
  std::vector<int> true_labels;
  std::vector<std::size_t> class_sizes;
  std::uint64_t seed = 0;

  std::size_t size() const { return true_labels.size(); }
  std::size_t num_classes() const { return class_sizes.size(); }
};

/// Long-tailed class sizes summing to N with max/min exactly R: sizes follow
/// n_min · R^((K-1-k)/(K-1)) with the rounding remainder spread over the
/// middle classes. Throws invalid-config when no such split exists.
std::vector<std::size_t> long_tailed_sizes(std::size_t n, std::size_t k, double ratio);

/// Gaussian blobs, class k drawn around its own random centre. Labels are
/// grouped by class (class 0 first, the largest). Deterministic per seed.
SyntheticDataset generate_dataset(std::size_t n, std::size_t k, std::size_t dim, double ratio,
                                  std::uint64_t seed, const BlobOptions& options = {});

}  // namespace p2ot::sim
