#include <doctest.h>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <set>

#include "connecto/eval.hpp"
#include "connecto/pipeline.hpp"
#include "oracles.hpp"

using namespace connecto;
using namespace connecto::eval;

TEST_CASE("mae, mse and pcc match textbook formulas") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix a = oracle::random_matrix(7, 11, seed);
    const Matrix b = oracle::random_matrix(7, 11, seed + 40);
    const auto fa = oracle::flatten(a);
    const auto fb = oracle::flatten(b);
    long double sae = 0, sse = 0;
    for (std::size_t i = 0; i < fa.size(); ++i) {
      sae += std::fabs(fa[i] - fb[i]);
      sse += (fa[i] - fb[i]) * (fa[i] - fb[i]);
    }
    CHECK(mae(a, b) == doctest::Approx(static_cast<double>(sae / 77)).epsilon(1e-14));
    CHECK(mse(a, b) == doctest::Approx(static_cast<double>(sse / 77)).epsilon(1e-14));
    CHECK(pcc(a, b) == doctest::Approx(oracle::pearson(fa, fb)).epsilon(1e-12));
    double mean_row = 0;
    for (Index r = 0; r < 7; ++r) {
      std::vector<double> xa, xb;
      for (Index j = 0; j < 11; ++j) {
        xa.push_back(a(r, j));
        xb.push_back(b(r, j));
      }
      mean_row += oracle::pearson(xa, xb) / 7.0;
      CHECK(per_subject_pcc(a, b)(r) == doctest::Approx(oracle::pearson(xa, xb)).epsilon(1e-12));
    }
    CHECK(pcc(a, b, PccMode::per_subject) == doctest::Approx(mean_row).epsilon(1e-12));
  }
  const Matrix a = oracle::random_matrix(3, 4, 1);
  CHECK(mae(a, a) == 0.0);
  CHECK(pcc(a, a) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pcc(a, (-2.0 * a).eval()) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK_THROWS_AS(mae(a, Matrix::Zero(3, 5)), ShapeError);
  WarningCapture cap;
  const double flat = pcc(a, Matrix::Constant(3, 4, 0.5));
  CHECK(flat == 0.0);
  CHECK(cap.messages().size() >= 1);
}

TEST_CASE("residual matrix") {
  Vector p(3), t(3);
  p << 0.1, 0.5, 0.9;
  t << 0.2, 0.5, 0.6;
  const auto r = residual_matrix(p, t);
  CHECK(r(0, 1) == doctest::Approx(0.1));
  CHECK(r(2, 1) == doctest::Approx(0.3));
  CHECK(r(1, 1) == 0.0);
}

TEST_CASE("k-fold split") {
  for (Index n : {10, 11, 150}) {
    for (Index k : {2, 3, 5}) {
      const auto f = kfold_split(n, k, 42);
      std::vector<Index> sizes(static_cast<std::size_t>(k), 0);
      for (Index v : f) ++sizes[static_cast<std::size_t>(v)];
      const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
      CHECK(*hi - *lo <= 1);
      CHECK(*lo >= 1);
      CHECK(f == kfold_split(n, k, 42));
    }
  }
  CHECK(kfold_split(30, 5, 1) != kfold_split(30, 5, 2));
  CHECK_THROWS_AS(kfold_split(10, 1, 0), ParameterError);
  CHECK_THROWS_AS(kfold_split(3, 5, 0), InsufficientDataError);
}

TEST_CASE("cross-validation predictions are out of fold") {
  const auto ds = generate_synthetic({.n_subjects = 30, .n_rois = 6, .seed = 5});
  pipeline::PipelineConfig c;
  c.learner.type = "ridge";
  c.learner.params.set("lambda", 0.1);
  const auto cv = cross_validate(c, ds, 3, 7);
  REQUIRE(cv.folds.size() == 3);
  const auto folds = kfold_split(30, 3, 7);
  double mean = 0;
  for (Index f = 0; f < 3; ++f) {
    std::vector<Index> tr, te;
    for (Index i = 0; i < 30; ++i) (folds[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
    const auto o = oracle::normal_equations(take_rows(ds.t0().rows(), tr), take_rows(ds.targets().rows(), tr).col(0), 0.1);
    for (Index i : te) {
      const double expected = ds.t0().rows().row(i).dot(o.w) + o.b;
      CHECK(cv.oof_predictions(i, 0) == doctest::Approx(expected).epsilon(1e-9));
    }
    CHECK(cv.folds[static_cast<std::size_t>(f)].mae ==
          doctest::Approx(mae(take_rows(cv.oof_predictions, te), take_rows(ds.targets().rows(), te))).epsilon(1e-12));
    mean += cv.folds[static_cast<std::size_t>(f)].mae / 3.0;
  }
  CHECK(cv.mean_mae == doctest::Approx(mean).epsilon(1e-14));
  CHECK(cv.std_mae >= 0.0);
  CHECK(cv.oof_subject_mae.size() == 30);
}

TEST_CASE("competition ranking") {
  CHECK(min_rank({0.3, 0.1, 0.1, 0.2}, true) == std::vector<int>{4, 1, 1, 3});
  CHECK(min_rank({0.3, 0.1, 0.1, 0.2}, false) == std::vector<int>{1, 3, 3, 2});
  CHECK(min_rank({}, true).empty());
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Vector v = oracle::random_vector(12, seed);
    std::vector<double> vals(v.data(), v.data() + 12);
    for (auto& x : vals) x = std::round(x * 4) / 4;
    const auto r = min_rank(vals, true);
    for (std::size_t i = 0; i < vals.size(); ++i) {
      int better = 0;
      for (double o : vals) better += o < vals[i];
      CHECK(r[i] == better + 1);
    }
  }
}

TEST_CASE("rank table aggregation") {
  std::vector<TeamScores> s(3);
  s[0] = {"a", 0.1, 0.1, 0.1, 0.9, 0.9, 0.9};
  s[1] = {"b", 0.2, 0.2, 0.2, 0.8, 0.8, 0.8};
  s[2] = {"c", 0.1, 0.3, 0.1, 0.7, 0.95, 0.7};
  const auto t = compute_rank_table(s);
  CHECK(t[0].mae.local[0] == 1);
  CHECK(t[2].mae.local[0] == 1);
  CHECK(t[2].mae.local[1] == 3);
  CHECK(t[0].mae.measure == 1);
  CHECK(t[2].mae.measure == 2);
  CHECK(t[1].mae.measure == 3);
  CHECK(t[2].pcc.local[1] == 1);
  CHECK(t[0].final_rank == 1);
  for (const auto& row : t) CHECK(row.final_rank >= 1);
  s[1].pcc_cv.reset();
  CHECK_THROWS_AS(compute_rank_table(s), DataError);
  const auto fromlocal = rank_table_from_local_ranks({"x", "y"}, {{{1, 2, 1}}, {{2, 1, 2}}}, {{{2, 2, 2}}, {{1, 1, 1}}});
  CHECK(fromlocal[0].mae.measure == 1);
  CHECK(fromlocal[1].pcc.measure == 1);
  CHECK(fromlocal[0].final_rank == 1);
  CHECK(fromlocal[1].final_rank == 1);
  const auto prod = rank_table_from_local_ranks({"x", "y"}, {{{1, 4, 1}}, {{2, 2, 2}}}, {{{1, 1, 1}}, {{1, 1, 1}}},
                                                Aggregator::product);
  CHECK(prod[0].mae.measure == 1);
  const auto mean = rank_table_from_local_ranks({"x", "y"}, {{{1, 4, 1}}, {{2, 2, 2}}}, {{{1, 1, 1}}, {{1, 1, 1}}});
  CHECK(mean[0].mae.measure == 1);
  CHECK(mean[1].mae.measure == 1);
}

TEST_CASE("incomplete beta and student t match boost") {
  for (double a : {0.5, 1.0, 2.5, 10.0, 74.5}) {
    for (double b : {0.5, 1.0, 3.0, 20.0}) {
      for (double x : {0.0, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0}) {
        CHECK(regularized_incomplete_beta(a, b, x) == doctest::Approx(boost::math::ibeta(a, b, x)).epsilon(1e-12));
      }
    }
  }
  for (double dof : {1.0, 2.0, 5.0, 29.0, 149.0}) {
    boost::math::students_t dist(dof);
    for (double t : {-8.0, -2.0, -0.3, 0.0, 0.3, 1.0, 2.0, 8.0}) {
      CHECK(student_t_cdf(t, dof) == doctest::Approx(boost::math::cdf(dist, t)).epsilon(1e-11));
      const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
      CHECK(student_t_two_tailed(t, dof) == doctest::Approx(p).epsilon(1e-11));
    }
  }
}

TEST_CASE("paired t-test") {
  const Vector a = oracle::random_vector(40, 1);
  const Vector b = oracle::random_vector(40, 2);
  const auto r = paired_ttest(a, b);
  const Vector d = a - b;
  const double mean = d.mean();
  const double sd = std::sqrt((d.array() - mean).square().sum() / 39.0);
  const double t = mean / (sd / std::sqrt(40.0));
  boost::math::students_t dist(39.0);
  CHECK(r.t == doctest::Approx(t).epsilon(1e-12));
  CHECK(r.dof == 39.0);
  CHECK(r.p == doctest::Approx(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)))).epsilon(1e-10));
  CHECK(paired_ttest(a, a).p == 1.0);
  CHECK(paired_ttest(a, (a.array() + 1.0).matrix()).p == 0.0);
  CHECK_THROWS_AS(paired_ttest(a.head(1), b.head(1)), InsufficientDataError);
  const auto m = paired_ttest_matrix({a, b, (a + b).eval()});
  CHECK(m.rows() == 3);
  CHECK(m(0, 0) == 1.0);
  CHECK(m(0, 1) == m(1, 0));
  CHECK(m(0, 1) == doctest::Approx(r.p).epsilon(1e-14));
}
