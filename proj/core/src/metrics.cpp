#include "p2ot/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "p2ot/errors.hpp"

namespace p2ot::metrics {

Assignment hungarian_match(const CountMatrix& confusion) {
  const std::size_t n = confusion.size();
  for (const auto& row : confusion) {
    if (row.size() != n) throw_invalid_input("confusion matrix must be square");
    for (std::int64_t c : row) {
      if (c < 0) throw_invalid_input("confusion counts must be nonnegative");
    }
  }
  if (n == 0) return {};

  std::int64_t peak = 0;
  for (const auto& row : confusion) peak = std::max(peak, *std::max_element(row.begin(), row.end()));

  // Minimize peak - count. 1-based potentials, column 0 is the virtual root.
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> u(n + 1, 0);
  std::vector<std::int64_t> v(n + 1, 0);
  std::vector<std::size_t> owner(n + 1, 0);
  std::vector<std::size_t> way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    owner[0] = i;
    std::size_t j0 = 0;
    std::vector<std::int64_t> min_slack(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = owner[j0];
      std::int64_t delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const std::int64_t cur = (peak - confusion[i0 - 1][j - 1]) - u[i0] - v[j];
        if (cur < min_slack[j]) {
          min_slack[j] = cur;
          way[j] = j0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment assignment(n, -1);
  for (std::size_t j = 1; j <= n; ++j) assignment[owner[j] - 1] = static_cast<int>(j - 1);
  return assignment;
}

std::int64_t matched_total(const CountMatrix& confusion, const Assignment& assignment) {
  std::int64_t total = 0;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    total += confusion[i][static_cast<std::size_t>(assignment[i])];
  }
  return total;
}

GroupSplit head_medium_tail_split(std::size_t num_classes) {
  GroupSplit split;
  split.head = 3 * num_classes / 10;  // floor(0.3 K) without rounding surprises
  split.tail = split.head;
  split.medium = num_classes - split.head - split.tail;
  return split;
}

double normalized_mutual_info(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw_invalid_input("label vectors differ in length");
  if (a.empty()) throw_invalid_input("label vectors are empty");
  const double n = static_cast<double>(a.size());
  std::map<int, double> ca;
  std::map<int, double> cb;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
    joint[{a[i], b[i]}] += 1.0;
  }
  auto entropy = [n](const std::map<int, double>& counts) {
    double h = 0.0;
    for (const auto& [label, c] : counts) h -= (c / n) * std::log(c / n);
    return h;
  };
  const double ha = entropy(ca);
  const double hb = entropy(cb);
  double mi = 0.0;
  for (const auto& [cell, c] : joint) {
    mi += (c / n) * std::log((c * n) / (ca[cell.first] * cb[cell.second]));
  }
  const double denom = 0.5 * (ha + hb);
  if (denom <= 0.0) return 1.0;  // both labelings are a single block
  return std::clamp(mi / denom, 0.0, 1.0);
}

EvalReport evaluate(const std::vector<int>& pred_labels, const std::vector<int>& true_labels,
                    std::vector<std::size_t> class_sizes) {
  if (pred_labels.size() != true_labels.size()) {
    throw_invalid_input("predicted and true label vectors differ in length");
  }
  if (true_labels.empty()) throw_invalid_input("no labels to evaluate");
  if (class_sizes.empty()) {
    const int top = std::max(*std::max_element(true_labels.begin(), true_labels.end()),
                             *std::max_element(pred_labels.begin(), pred_labels.end()));
    if (top < 0) throw_invalid_input("labels must be nonnegative");
    class_sizes.assign(static_cast<std::size_t>(top) + 1, 0);
    for (int t : true_labels) {
      if (t < 0) throw_invalid_input("labels must be nonnegative");
      ++class_sizes[static_cast<std::size_t>(t)];
    }
  }
  const std::size_t k = class_sizes.size();
  auto check = [k](int label, const char* which, std::size_t index) {
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw_invalid_input(std::string(which) + " label " + std::to_string(label) + " at row " +
                          std::to_string(index) + " outside [0, " + std::to_string(k) + ")");
    }
  };

  CountMatrix confusion(k, std::vector<std::int64_t>(k, 0));
  std::vector<std::int64_t> true_count(k, 0);
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    check(pred_labels[i], "predicted", i);
    check(true_labels[i], "true", i);
    ++confusion[static_cast<std::size_t>(pred_labels[i])][static_cast<std::size_t>(true_labels[i])];
    ++true_count[static_cast<std::size_t>(true_labels[i])];
  }

  EvalReport report;
  report.assignment = hungarian_match(confusion);

  // After matching, cluster c predicts class assignment[c].
  std::vector<std::int64_t> correct(k, 0);
  std::vector<std::int64_t> predicted(k, 0);
  for (std::size_t c = 0; c < k; ++c) {
    const auto cls = static_cast<std::size_t>(report.assignment[c]);
    correct[cls] = confusion[c][cls];
    for (std::size_t t = 0; t < k; ++t) predicted[cls] += confusion[c][t];
  }

  report.per_class_acc.assign(k, 0.0);
  double acc_sum = 0.0;
  double f1_sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (true_count[c] == 0) continue;
    ++present;
    const double recall = static_cast<double>(correct[c]) / static_cast<double>(true_count[c]);
    const double precision =
        predicted[c] > 0 ? static_cast<double>(correct[c]) / static_cast<double>(predicted[c]) : 0.0;
    report.per_class_acc[c] = recall;
    acc_sum += recall;
    f1_sum += (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  report.acc = acc_sum / static_cast<double>(present);
  report.f1 = f1_sum / static_cast<double>(present);
  report.nmi = normalized_mutual_info(pred_labels, true_labels);

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return class_sizes[x] > class_sizes[y]; });
  const GroupSplit split = head_medium_tail_split(k);
  report.head_classes = split.head;
  report.medium_classes = split.medium;
  report.tail_classes = split.tail;
  auto group_mean = [&](std::size_t begin, std::size_t count) {
    if (count == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t r = begin; r < begin + count; ++r) sum += report.per_class_acc[order[r]];
    return sum / static_cast<double>(count);
  };
  report.head_acc = group_mean(0, split.head);
  report.medium_acc = group_mean(split.head, split.medium);
  report.tail_acc = group_mean(split.head + split.medium, split.tail);
  return report;
}

}  // namespace p2ot::metrics
