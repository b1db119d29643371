#pragma once

#include "p2ot/types.hpp"

namespace p2ot {

/// Process-wide cap on worker threads used inside matrix-vector products.
/// Defaults to 1. Results do not depend on the cap: every output entry is
/// accumulated in the same order whatever the split.
void set_thread_limit(unsigned threads);
unsigned thread_limit();

/// Reads P2OT_THREADS; returns `fallback` when unset or unparsable.
unsigned thread_limit_from_env(unsigned fallback = 1);

// out = M x
void multiply(const Matrix& m, const Vector& x, Vector& out);
// out = M^T x
void multiply_transposed(const Matrix& m, const Vector& x, Vector& out);

// out_i = log sum_j exp(L_ij + y_j)
void log_multiply(const Matrix& log_m, const Vector& log_x, Vector& out);
// out_j = log sum_i exp(L_ij + y_i)
void log_multiply_transposed(const Matrix& log_m, const Vector& log_x, Vector& out);

}  // namespace p2ot
