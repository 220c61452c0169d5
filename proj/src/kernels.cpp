#include "connecto/kernels.hpp"

#include <cmath>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace connecto::kernels {

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_thread_count(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n < 1 ? 1 : n);
#else
  (void)n;
#endif
}

double compensated_sum(const double* data, Index n, Index stride) {
  double sum = 0.0;
  double comp = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double v = data[i * stride];
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

namespace {

void moments_of_column(const Matrix& x, Index j, ColumnMoments& out) {
  const Index n = x.rows();
  const double* col = x.col(j).data();
  const double mean = compensated_sum(col, n) / static_cast<double>(n);
  double sum = 0.0;
  double comp = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double d = col[i] - mean;
    const double v = d * d;
    const double t = sum + v;
    comp += (sum >= v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  out.mean(j) = mean;
  out.variance(j) = (sum + comp) / static_cast<double>(n);
}

void distances_of_row(const Matrix& a, const Matrix& b, Index i, Matrix& out) {
  for (Index j = 0; j < b.rows(); ++j) {
    double s = 0.0;
    for (Index k = 0; k < a.cols(); ++k) {
      const double d = a(i, k) - b(j, k);
      s += d * d;
    }
    out(i, j) = s;
  }
}

}  // namespace

void parallel_for(Index n, const std::function<void(Index)>& body) {
  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic, 1)
  for (Index i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

ColumnMoments column_moments(const Matrix& x) {
  ColumnMoments out{Vector::Zero(x.cols()), Vector::Zero(x.cols())};
  if (x.rows() == 0) return out;
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < x.cols(); ++j) moments_of_column(x, j, out);
  return out;
}

Matrix pairwise_sq_distances(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("pairwise distances need equal column counts");
  Matrix out(a.rows(), b.rows());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < a.rows(); ++i) distances_of_row(a, b, i, out);
  return out;
}

namespace serial {

void for_each(Index n, const std::function<void(Index)>& body) {
  for (Index i = 0; i < n; ++i) body(i);
}

ColumnMoments column_moments(const Matrix& x) {
  ColumnMoments out{Vector::Zero(x.cols()), Vector::Zero(x.cols())};
  if (x.rows() == 0) return out;
  for (Index j = 0; j < x.cols(); ++j) moments_of_column(x, j, out);
  return out;
}

Matrix pairwise_sq_distances(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("pairwise distances need equal column counts");
  Matrix out(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i) distances_of_row(a, b, i, out);
  return out;
}

}  // namespace serial

}  // namespace connecto::kernels
