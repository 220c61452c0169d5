#pragma once

// Data-parallel kernels. Each parallel kernel has a serial twin in
// kernels::serial with identical per-item arithmetic, so parallel output is
// bitwise equal to serial output for any thread count. The serial versions
// are kept for tests and for the kernel benchmark.

#include <functional>

#include "connecto/common.hpp"

namespace connecto::kernels {

/// Threads used by the parallel kernels (OpenMP max threads).
int thread_count();
void set_thread_count(int n);

/// Runs body(i) for i in [0, n); iterations must be independent.
void parallel_for(Index n, const std::function<void(Index)>& body);

struct ColumnMoments {
  Vector mean;
  Vector variance;  // population variance
};

/// Per-column mean and population variance with compensated summation.
ColumnMoments column_moments(const Matrix& x);

/// Squared Euclidean distances between every row of a and every row of b.
Matrix pairwise_sq_distances(const Matrix& a, const Matrix& b);

/// Neumaier-compensated sum.
double compensated_sum(const double* data, Index n, Index stride = 1);

namespace serial {
void for_each(Index n, const std::function<void(Index)>& body);
ColumnMoments column_moments(const Matrix& x);
Matrix pairwise_sq_distances(const Matrix& a, const Matrix& b);
}  // namespace serial

}  // namespace connecto::kernels
