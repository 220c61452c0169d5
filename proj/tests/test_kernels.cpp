#include <doctest.h>

#include <atomic>
#include <stdexcept>

#include "connecto/kernels.hpp"
#include "oracles.hpp"

using namespace connecto;

TEST_CASE("parallel kernels are bitwise equal to their serial twins") {
  const Matrix x = oracle::random_matrix(301, 57, 1, -1e3, 1e3);
  const Matrix y = oracle::random_matrix(23, 57, 2);
  const int saved = kernels::thread_count();
  for (int threads : {1, 2, 4, 8}) {
    kernels::set_thread_count(threads);
    const auto p = kernels::column_moments(x);
    const auto s = kernels::serial::column_moments(x);
    CHECK(p.mean == s.mean);
    CHECK(p.variance == s.variance);
    CHECK(kernels::pairwise_sq_distances(x, y) == kernels::serial::pairwise_sq_distances(x, y));
  }
  kernels::set_thread_count(saved);
}

TEST_CASE("column moments and distances match long-double oracles") {
  const Matrix x = oracle::random_matrix(50, 4, 3);
  const auto m = kernels::column_moments(x);
  for (Index j = 0; j < 4; ++j) {
    long double s = 0, q = 0;
    for (Index i = 0; i < 50; ++i) s += x(i, j);
    const long double mean = s / 50;
    for (Index i = 0; i < 50; ++i) q += (x(i, j) - mean) * (x(i, j) - mean);
    CHECK(m.mean(j) == doctest::Approx(static_cast<double>(mean)).epsilon(1e-15));
    CHECK(m.variance(j) == doctest::Approx(static_cast<double>(q / 50)).epsilon(1e-13));
  }
  const Matrix d = kernels::pairwise_sq_distances(x, x);
  for (Index i = 0; i < 50; ++i) {
    CHECK(d(i, i) == doctest::Approx(0.0).epsilon(1e-12));
    for (Index k = 0; k < 50; ++k) CHECK(d(i, k) == doctest::Approx((x.row(i) - x.row(k)).squaredNorm()).epsilon(1e-12));
  }
}

TEST_CASE("compensated sum") {
  std::vector<double> v = {1.0, 1e100, 1.0, -1e100};
  CHECK(kernels::compensated_sum(v.data(), 4) == 2.0);
  std::vector<double> strided = {1, 100, 2, 100, 3, 100};
  CHECK(kernels::compensated_sum(strided.data(), 3, 2) == 6.0);
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  std::vector<std::atomic<int>> hits(1000);
  kernels::parallel_for(1000, [&](Index i) { ++hits[static_cast<std::size_t>(i)]; });
  for (const auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(kernels::parallel_for(100, [](Index i) {
                    if (i == 37) throw DataError("boom");
                  }),
                  DataError);
  std::atomic<int> inner{0};
  kernels::parallel_for(4, [&](Index) { kernels::parallel_for(5, [&](Index) { ++inner; }); });
  CHECK(inner.load() == 20);
}

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(5, 3) == derive_seed(5, 3));
  Rng a = make_rng(9, 2), b = make_rng(9, 2);
  CHECK(a() == b());
}
