#include "p2ot/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>
#include <vector>

namespace p2ot {
namespace {

std::atomic<unsigned> g_thread_limit{1};

// Below this many matrix entries the thread start-up cost dominates.
constexpr Index kParallelThreshold = Index{1} << 18;

template <typename Fn>
void for_ranges(Index count, Index work, Fn&& fn) {
  const unsigned limit = g_thread_limit.load(std::memory_order_relaxed);
  const Index parts = std::min<Index>(limit, count);
  if (parts <= 1 || work < kParallelThreshold) {
    fn(Index{0}, count);
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(static_cast<std::size_t>(parts - 1));
  const Index chunk = (count + parts - 1) / parts;
  for (Index p = 1; p < parts; ++p) {
    const Index begin = p * chunk;
    const Index end = std::min(count, begin + chunk);
    if (begin < end) workers.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(Index{0}, std::min(count, chunk));
}

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

void set_thread_limit(unsigned threads) {
  g_thread_limit.store(std::max(1u, threads), std::memory_order_relaxed);
}

unsigned thread_limit() { return g_thread_limit.load(std::memory_order_relaxed); }

unsigned thread_limit_from_env(unsigned fallback) {
  const char* raw = std::getenv("P2OT_THREADS");
  if (raw == nullptr || *raw == '\0') return fallback;
  char* end = nullptr;
  const unsigned long value = std::strtoul(raw, &end, 10);
  if (end == raw || *end != '\0' || value == 0) return fallback;
  return static_cast<unsigned>(std::min<unsigned long>(value, 1024));
}

void multiply(const Matrix& m, const Vector& x, Vector& out) {
  const Index rows = m.rows();
  const Index cols = m.cols();
  out.resize(rows);
  for_ranges(rows, rows * cols, [&](Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      const double* row = m.data() + i * cols;
      double acc = 0.0;
      for (Index j = 0; j < cols; ++j) acc += row[j] * x[j];
      out[i] = acc;
    }
  });
}

void multiply_transposed(const Matrix& m, const Vector& x, Vector& out) {
  const Index rows = m.rows();
  const Index cols = m.cols();
  out.setZero(cols);
  for_ranges(cols, rows * cols, [&](Index begin, Index end) {
    double* dst = out.data();
    for (Index i = 0; i < rows; ++i) {
      const double* row = m.data() + i * cols;
      const double xi = x[i];
      for (Index j = begin; j < end; ++j) dst[j] += row[j] * xi;
    }
  });
}

void log_multiply(const Matrix& log_m, const Vector& log_x, Vector& out) {
  const Index rows = log_m.rows();
  const Index cols = log_m.cols();
  out.resize(rows);
  for_ranges(rows, rows * cols, [&](Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      const double* row = log_m.data() + i * cols;
      double peak = kNegInf;
      for (Index j = 0; j < cols; ++j) peak = std::max(peak, row[j] + log_x[j]);
      if (peak == kNegInf) {
        out[i] = kNegInf;
        continue;
      }
      double acc = 0.0;
      for (Index j = 0; j < cols; ++j) acc += std::exp(row[j] + log_x[j] - peak);
      out[i] = peak + std::log(acc);
    }
  });
}

void log_multiply_transposed(const Matrix& log_m, const Vector& log_x, Vector& out) {
  const Index rows = log_m.rows();
  const Index cols = log_m.cols();
  out.resize(cols);
  Vector peak = Vector::Constant(cols, kNegInf);
  Vector acc = Vector::Zero(cols);
  for_ranges(cols, rows * cols, [&](Index begin, Index end) {
    for (Index i = 0; i < rows; ++i) {
      const double* row = log_m.data() + i * cols;
      for (Index j = begin; j < end; ++j) peak[j] = std::max(peak[j], row[j] + log_x[i]);
    }
    for (Index i = 0; i < rows; ++i) {
      const double* row = log_m.data() + i * cols;
      for (Index j = begin; j < end; ++j) {
        if (peak[j] != kNegInf) acc[j] += std::exp(row[j] + log_x[i] - peak[j]);
      }
    }
    for (Index j = begin; j < end; ++j) {
      out[j] = peak[j] == kNegInf ? kNegInf : peak[j] + std::log(acc[j]);
    }
  });
}

}  // namespace p2ot
