#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace p2ot::metrics {

/// confusion[cluster][class] = number of samples in that cell.
using CountMatrix = std::vector<std::vector<std::int64_t>>;
/// assignment[cluster] = class.
using Assignment = std::vector<int>;

/// Maximum-weight perfect matching (Kuhn-Munkres with potentials, exact
/// integer arithmetic). Ties resolve deterministically: rows are inserted in
/// index order and the lowest column index wins each minimum search.
Assignment hungarian_match(const CountMatrix& confusion);

std::int64_t matched_total(const CountMatrix& confusion, const Assignment& assignment);

struct EvalReport {
  double acc = 0.0;  // mean per-class recall after matching
  double nmi = 0.0;
  double f1 = 0.0;   // macro over classes
  double head_acc = 0.0;
  double medium_acc = 0.0;
  double tail_acc = 0.0;
  std::size_t head_classes = 0;
  std::size_t medium_classes = 0;
  std::size_t tail_classes = 0;
  std::vector<double> per_class_acc;
  Assignment assignment;
};

/// Sizes of the head / medium / tail groups for K classes: floor(0.3K) head,
/// floor(0.3K) tail, the remainder medium.
struct GroupSplit {
  std::size_t head = 0;
  std::size_t medium = 0;
  std::size_t tail = 0;
};
GroupSplit head_medium_tail_split(std::size_t num_classes);

/// Labels must lie in [0, K) with K = class_sizes.size(); an empty
/// `class_sizes` means "count them from true_labels".
EvalReport evaluate(const std::vector<int>& pred_labels, const std::vector<int>& true_labels,
                    std::vector<std::size_t> class_sizes = {});

/// Arithmetic-mean normalized mutual information.
double normalized_mutual_info(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace p2ot::metrics
