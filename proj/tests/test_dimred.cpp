#include <doctest.h>

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <map>

#include "connecto/dimred.hpp"
#include "oracles.hpp"

using namespace connecto;
using namespace connecto::dimred;

namespace {

// Plug-in mutual information from explicit bin labels.
double mi_oracle(const std::vector<Index>& a, const std::vector<Index>& b) {
  std::map<std::pair<Index, Index>, double> joint;
  std::map<Index, double> pa, pb;
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0 / n;
    pa[a[i]] += 1.0 / n;
    pb[b[i]] += 1.0 / n;
  }
  double mi = 0;
  for (const auto& [k, p] : joint) mi += p * std::log(p / (pa[k.first] * pb[k.second]));
  return mi;
}

}  // namespace

TEST_CASE("pca matches a jacobi eigen-decomposition of the covariance") {
  Matrix x = oracle::random_matrix(50, 6, 1);
  x.col(0) *= 5.0;
  x.col(3) *= 3.0;
  const Matrix xc = x.rowwise() - x.colwise().mean();
  Vector evals;
  Matrix evecs;
  oracle::jacobi_eigen(xc.transpose() * xc / 50.0, evals, evecs);
  const auto p = fit_pca(x, 4);
  REQUIRE(p.k() == 4);
  for (Index c = 0; c < 4; ++c) {
    CHECK(p.explained_variance(c) == doctest::Approx(evals(c)).epsilon(1e-10));
    const double align = std::abs(p.components.row(c).dot(evecs.col(c)));
    CHECK(align == doctest::Approx(1.0).epsilon(1e-10));
    Index arg = 0;
    p.components.row(c).cwiseAbs().maxCoeff(&arg);
    CHECK(p.components(c, arg) > 0.0);
  }
  CHECK((p.components * p.components.transpose() - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(p.explained_variance_ratio.sum() == doctest::Approx(evals.head(4).sum() / evals.sum()).epsilon(1e-10));
  const auto full = fit_pca(x, 6);
  CHECK((full.reconstruct(full.project(x)) - x).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(fit_pca(x, 7), ParameterError);
  CHECK_THROWS_AS(fit_pca(x, 0), ParameterError);
  CHECK_THROWS_AS(p.project(Matrix::Zero(2, 5)), ShapeError);
}

TEST_CASE("truncated svd does not centre") {
  Matrix x = oracle::random_matrix(30, 5, 2, 0.0, 1.0);
  const auto t = fit_tsvd(x, 2);
  CHECK(t.center.isZero());
  Vector evals;
  Matrix evecs;
  oracle::jacobi_eigen(x.transpose() * x, evals, evecs);
  CHECK(std::abs(t.components.row(0).dot(evecs.col(0))) == doctest::Approx(1.0).epsilon(1e-10));
  const Matrix z = t.project(x);
  CHECK((z - x * t.components.transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("pca projections apply train statistics to new rows") {
  const Matrix train = oracle::random_matrix(40, 5, 3);
  const Matrix test = oracle::random_matrix(3, 5, 4);
  const auto p = fit_pca(train, 3);
  const Matrix z = p.project(test);
  const Matrix manual = (test.rowwise() - train.colwise().mean()) * p.components.transpose();
  CHECK((z - manual).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("variance threshold") {
  Matrix x(4, 4);
  x << 1, 0, 5, 1,
       1, 1, 5, 2,
       1, 0, 5, 3,
       1, 1, 5, 4;
  const auto r = variance_threshold(x, {});
  CHECK(r.selected.keep == std::vector<bool>{false, true, false, true});
  CHECK(r.scores(1) == doctest::Approx(0.25));
  const auto t = variance_threshold(x, {.threshold = 0.5});
  CHECK(t.selected.keep == std::vector<bool>{false, false, false, true});
  const auto low = variance_threshold(x, {.drop_lowest = 3});
  CHECK(low.selected.keep == std::vector<bool>{false, false, false, true});
  const auto tie = variance_threshold(x, {.drop_lowest = 1});
  CHECK(tie.selected.keep == std::vector<bool>{false, true, true, true});
  CHECK_THROWS_AS(variance_threshold(x, {.threshold = 10.0}), DataError);
  CHECK_THROWS_AS(variance_threshold(x, {.threshold = 0.1, .drop_lowest = 1}), ParameterError);
  CHECK_THROWS_AS(variance_threshold(x, {.drop_lowest = 4}), ParameterError);
}

TEST_CASE("equal-frequency binning") {
  Vector v(10);
  v << 9, 8, 7, 6, 5, 4, 3, 2, 1, 0;
  const auto b = equal_frequency_bins(v, 5);
  CHECK(b == std::vector<Index>{4, 4, 3, 3, 2, 2, 1, 1, 0, 0});
  Vector tied(6);
  tied << 1, 1, 1, 1, 2, 3;
  const auto t = equal_frequency_bins(tied, 3);
  CHECK(t == std::vector<Index>{0, 0, 0, 0, 2, 2});
}

TEST_CASE("mutual information matches the plug-in oracle") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Vector a = oracle::random_vector(100, seed);
    const Vector b = a.array().square() + 0.3 * oracle::random_vector(100, seed + 50).array();
    const double mi = binned_mutual_information(a, b, 8);
    CHECK(mi == doctest::Approx(mi_oracle(equal_frequency_bins(a, 8), equal_frequency_bins(b, 8))).epsilon(1e-12));
  }
  const Vector a = oracle::random_vector(100, 1);
  CHECK(binned_mutual_information(a, a, 10) == doctest::Approx(std::log(10.0)).epsilon(1e-12));
  CHECK(binned_mutual_information(a, Vector::Constant(100, 2.0), 10) == 0.0);
  CHECK_THROWS_AS(binned_mutual_information(a, a, 1), ParameterError);
}

TEST_CASE("select k best by mutual information") {
  Matrix x = oracle::random_matrix(200, 6, 7);
  const Vector y = x.col(4).array().square() + x.col(1).array();
  const auto r = select_k_best_mi(x, y, 2, 10);
  CHECK(r.selected.keep == std::vector<bool>{false, true, false, false, true, false});
  Matrix same = Matrix::Zero(20, 3);
  const auto ties = select_k_best_mi(same, oracle::random_vector(20, 3), 2, 10);
  CHECK(ties.selected.keep == std::vector<bool>{true, true, false});
  CHECK_THROWS_AS(select_k_best_mi(x, y, 7, 10), ParameterError);
}

TEST_CASE("percentile candidates") {
  CHECK(percentile_count(595, 10) == 59);
  CHECK(percentile_count(10, 100) == 10);
  CHECK(percentile_count(10, 1) == 1);
  CHECK_THROWS_AS(percentile_count(10, 0), ParameterError);
}

TEST_CASE("generic univariate select picks the candidate with the lowest cv error") {
  Matrix x = oracle::random_matrix(120, 10, 8);
  const Vector y = 2.0 * x.col(2) - x.col(6);
  const FitPredict ols = [](const Matrix& a, const Vector& b, const Matrix& q) {
    const auto f = oracle::normal_equations(a, b, 1e-9);
    return Vector((q * f.w).array() + f.b);
  };
  const auto r = generic_univariate_select(x, y, {{1, 2}, {}}, 5, ols, 0, 10);
  CHECK(r.selected.kept() == 2);
  CHECK(r.selected.keep[2]);
  CHECK(r.selected.keep[6]);
  const auto single = generic_univariate_select(x, y, {{3}, {}}, 5, ols, 0, 10);
  CHECK(single.selected.kept() == 3);
  CHECK_THROWS_AS(generic_univariate_select(x, y, {}, 5, ols, 0, 10), ParameterError);
}

TEST_CASE("backward elimination p-values match the t-distribution oracle") {
  const Matrix x = oracle::random_matrix(60, 4, 9);
  const Vector y = 3.0 * x.col(0) + 0.3 * oracle::random_vector(60, 10);
  const auto first = backward_elimination(x, y, {0.05, 0});
  const auto o = oracle::normal_equations(x, y, 0.0);
  const Matrix xc = x.rowwise() - x.colwise().mean();
  const Vector yc = y.array() - y.mean();
  const double dof = 60 - 4 - 1;
  const double sigma2 = (yc - xc * o.w).squaredNorm() / dof;
  const Matrix inv = (xc.transpose() * xc).inverse();
  boost::math::students_t dist(dof);
  for (Index j = 0; j < 4; ++j) {
    const double t = o.w(j) / std::sqrt(sigma2 * inv(j, j));
    const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    CHECK(first.scores(j) == doctest::Approx(p).epsilon(1e-8));
  }
  CHECK(first.selected.kept() == 4);
  const auto full = backward_elimination(x, y, {0.05});
  CHECK(full.selected.keep[0]);
  CHECK(full.selected.kept() >= 1);
  for (Index j : full.selected.kept_columns()) CHECK(full.scores(j) <= 0.05);
  const auto noise = backward_elimination(oracle::random_matrix(30, 3, 11), oracle::random_vector(30, 12), {0.999});
  CHECK(noise.selected.kept() >= 1);
}
