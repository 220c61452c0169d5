#pragma once

// Independent reference computations used by the tests. They avoid the
// library's code paths: long-double loops, textbook formulas, brute force.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "connecto/common.hpp"

namespace oracle {

using connecto::Index;
using connecto::Matrix;
using connecto::Vector;

inline Matrix random_matrix(Index n, Index d, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) m(i, j) = u(rng);
  return m;
}

inline Vector random_vector(Index n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  return random_matrix(n, 1, seed, lo, hi).col(0);
}

// Gaussian elimination with partial pivoting in long double.
inline std::vector<long double> solve_dense(std::vector<std::vector<long double>> a, std::vector<long double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const long double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<long double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    long double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

struct LinearFit {
  Vector w;
  double b = 0.0;
};

// Normal equations on the augmented design [X 1]; the intercept is not
// penalised.
inline LinearFit normal_equations(const Matrix& x, const Vector& y, double lambda) {
  const Index n = x.rows();
  const Index d = x.cols();
  std::vector<std::vector<long double>> a(d + 1, std::vector<long double>(d + 1, 0.0L));
  std::vector<long double> rhs(d + 1, 0.0L);
  for (Index i = 0; i < n; ++i) {
    for (Index p = 0; p <= d; ++p) {
      const long double xp = p < d ? x(i, p) : 1.0L;
      rhs[p] += xp * y(i);
      for (Index q = 0; q <= d; ++q) a[p][q] += xp * (q < d ? x(i, q) : 1.0L);
    }
  }
  for (Index p = 0; p < d; ++p) a[p][p] += lambda;
  const auto sol = solve_dense(a, rhs);
  LinearFit f;
  f.w.resize(d);
  for (Index p = 0; p < d; ++p) f.w(p) = static_cast<double>(sol[p]);
  f.b = static_cast<double>(sol[d]);
  return f;
}

// Cyclic Jacobi eigen-decomposition of a symmetric matrix; eigenvalues
// descending, eigenvectors in columns.
inline void jacobi_eigen(Matrix a, Vector& values, Matrix& vectors) {
  const Index n = a.rows();
  vectors = Matrix::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Index p = 0; p < n; ++p)
      for (Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Index p = 0; p < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Index k = 0; k < n; ++k) {
          const double vkp = vectors(k, p);
          const double vkq = vectors(k, q);
          vectors(k, p) = c * vkp - s * vkq;
          vectors(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index i, Index j) { return a(i, i) > a(j, j); });
  values.resize(n);
  Matrix sorted(n, n);
  for (Index k = 0; k < n; ++k) {
    values(k) = a(order[k], order[k]);
    sorted.col(k) = vectors.col(order[k]);
  }
  vectors = sorted;
}

// Quantile by linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Textbook Pearson correlation.
inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  long double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
    saa += static_cast<long double>(a[i]) * a[i];
    sbb += static_cast<long double>(b[i]) * b[i];
    sab += static_cast<long double>(a[i]) * b[i];
  }
  const long double cov = sab - sa * sb / n;
  const long double va = saa - sa * sa / n;
  const long double vb = sbb - sb * sb / n;
  return static_cast<double>(cov / std::sqrt(va * vb));
}

inline std::vector<double> flatten(const Matrix& m) {
  std::vector<double> out;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  return out;
}

// Brute-force k nearest rows: squared distance, ties by lower index.
inline std::vector<Index> nearest(const Matrix& train, const Vector& q, Index k) {
  std::vector<std::pair<long double, Index>> d;
  for (Index i = 0; i < train.rows(); ++i) {
    long double s = 0;
    for (Index j = 0; j < train.cols(); ++j) {
      const long double t = static_cast<long double>(train(i, j)) - q(j);
      s += t * t;
    }
    d.emplace_back(s, i);
  }
  std::sort(d.begin(), d.end());
  std::vector<Index> out;
  for (Index i = 0; i < k; ++i) out.push_back(d[static_cast<std::size_t>(i)].second);
  return out;
}

// Smallest value whose cumulative weight reaches half the total, scanning
// the values in sorted order.
inline double weighted_median(std::vector<double> values, std::vector<double> weights) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  double total = 0;
  for (double w : weights) total += w;
  double cum = 0;
  for (std::size_t i : idx) {
    cum += weights[i];
    if (cum >= 0.5 * total) return values[i];
  }
  return values[idx.back()];
}

}  // namespace oracle
