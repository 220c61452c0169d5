#include <doctest.h>

#include <cmath>

#include "connecto/learners.hpp"
#include "oracles.hpp"

using namespace connecto;
using namespace connecto::learners;

namespace {

// Checks the dual KKT conditions of epsilon-SVR at a solution.
void check_svr_kkt(const Matrix& gram, const Vector& y, const SvrDual& dual, double c, double eps, double tol) {
  const Index n = y.size();
  CHECK(std::abs(dual.coefficients.sum()) < 1e-9 * c * static_cast<double>(n));
  for (Index i = 0; i < n; ++i) {
    const double beta = dual.coefficients(i);
    CHECK(std::abs(beta) <= c * (1.0 + 1e-12));
    double f = dual.bias;
    for (Index j = 0; j < n; ++j) f += dual.coefficients(j) * gram(j, i);
    const double r = y(i) - f;
    if (beta == 0.0) {
      CHECK(std::abs(r) <= eps + tol);
    } else if (std::abs(beta) < c * (1.0 - 1e-9)) {
      CHECK(std::abs(std::abs(r) - eps) <= tol);
      CHECK((r > 0) == (beta > 0));
    } else {
      CHECK(std::abs(r) >= eps - tol);
    }
  }
}

}  // namespace

TEST_CASE("svr dual solution satisfies the KKT conditions") {
  for (KernelType type : {KernelType::linear, KernelType::rbf}) {
    const Matrix x = oracle::random_matrix(40, 3, 1);
    const Vector y = x.col(0).array().sin() + 0.5 * x.col(1).array() + 0.1 * oracle::random_vector(40, 2).array();
    SvrParams p;
    p.c = 2.0;
    p.epsilon = 0.05;
    p.tol = 1e-6;
    p.kernel.type = type;
    const double gamma = resolve_gamma(p.kernel, 3);
    CHECK(gamma == doctest::Approx(1.0 / 3.0));
    const Matrix gram = kernel_matrix(x, x, p.kernel, gamma);
    const SvrDual dual = solve_svr_dual(gram, y, p);
    CHECK(dual.converged);
    check_svr_kkt(gram, y, dual, p.c, p.epsilon, 1e-5);
  }
}

TEST_CASE("rbf kernel matrix matches the closed form") {
  const Matrix a = oracle::random_matrix(4, 3, 3);
  const Matrix b = oracle::random_matrix(5, 3, 4);
  Kernel k;
  const Matrix g = kernel_matrix(a, b, k, 0.7);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 5; ++j)
      CHECK(g(i, j) == doctest::Approx(std::exp(-0.7 * (a.row(i) - b.row(j)).squaredNorm())).epsilon(1e-13));
  CHECK(k.eval(a.row(0).data(), a.row(0).data(), 3, 0.7) == 1.0);
}

TEST_CASE("linear svr with a wide tube predicts a constant") {
  const Matrix x = oracle::random_matrix(30, 2, 5);
  const Vector y = oracle::random_vector(30, 6, -0.1, 0.1);
  SvrParams p;
  p.epsilon = 1.0;
  p.kernel.type = KernelType::linear;
  const auto m = fit_svr(x, y, p);
  CHECK(m.coefficients().size() == 0);
  const Vector pred = m.predict(x);
  CHECK(pred.maxCoeff() - pred.minCoeff() < 1e-12);
  CHECK(std::abs(pred(0)) <= 1.0);
}

TEST_CASE("linear svr with a tight tube and large C fits a linear function") {
  const Matrix x = oracle::random_matrix(50, 3, 7);
  Vector w(3);
  w << 0.5, -1.0, 0.25;
  const Vector y = (x * w).array() + 0.3;
  SvrParams p;
  p.c = 100.0;
  p.epsilon = 1e-3;
  p.tol = 1e-8;
  p.kernel.type = KernelType::linear;
  const auto m = fit_svr(x, y, p);
  CHECK((m.linear_weights() - w).cwiseAbs().maxCoeff() < 5e-3);
  CHECK((m.predict(x) - y).cwiseAbs().maxCoeff() < 2e-3);
  const auto multi = fit_svr_multi(x, (Matrix(50, 2) << y, -y).finished(), p);
  CHECK((multi.predict(x).col(0) - m.predict(x)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK_THROWS_AS(fit_svr(x, y, {.c = 0.0}), ParameterError);
}

TEST_CASE("knn matches brute force") {
  const Matrix train = oracle::random_matrix(60, 4, 8);
  const Matrix targets = oracle::random_matrix(60, 2, 9);
  const Matrix query = oracle::random_matrix(15, 4, 10);
  for (Index k : {1, 3, 7}) {
    const auto uni = fit_knn(train, targets, k);
    const auto dist = fit_knn(train, targets, k, NeighborWeighting::distance);
    const Matrix pu = uni.predict(query);
    const Matrix pd = dist.predict(query);
    for (Index q = 0; q < query.rows(); ++q) {
      const auto nn = oracle::nearest(train, query.row(q).transpose(), k);
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(2);
      Eigen::RowVectorXd wmean = Eigen::RowVectorXd::Zero(2);
      double wsum = 0;
      for (Index j : nn) {
        mean += targets.row(j);
        const double w = 1.0 / (train.row(j) - query.row(q)).norm();
        wmean += w * targets.row(j);
        wsum += w;
      }
      CHECK((pu.row(q) - mean / static_cast<double>(k)).cwiseAbs().maxCoeff() < 1e-14);
      CHECK((pd.row(q) - wmean / wsum).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  const auto one = fit_knn(train, targets, 1, NeighborWeighting::distance);
  CHECK(one.predict(train) == targets);
  CHECK(fit_knn(train, targets, 60).predict(query).row(0).isApprox(targets.colwise().mean(), 1e-14));
  CHECK_THROWS_AS(fit_knn(train, targets, 61), ParameterError);
}

TEST_CASE("knn breaks distance ties by training order") {
  Matrix train(3, 1);
  train << -1, 1, 1;
  Matrix targets(3, 1);
  targets << 10, 20, 30;
  const auto m = fit_knn(train, targets, 1);
  CHECK(m.predict(Matrix::Zero(1, 1))(0, 0) == 10.0);
}

TEST_CASE("k-means") {
  Matrix x(90, 2);
  const Matrix noise = oracle::random_matrix(90, 2, 11, -0.5, 0.5);
  for (Index i = 0; i < 90; ++i) {
    x(i, 0) = 10.0 * static_cast<double>(i % 3) + noise(i, 0);
    x(i, 1) = noise(i, 1);
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = kmeans(x, 3, seed);
    for (std::size_t t = 1; t < r.inertia_trace.size(); ++t) CHECK(r.inertia_trace[t] <= r.inertia_trace[t - 1] + 1e-12);
    for (Index i = 0; i < 90; ++i) {
      CHECK(r.labels[static_cast<std::size_t>(i)] == r.labels[static_cast<std::size_t>(i % 3)]);
      Index best = 0;
      for (Index c = 1; c < 3; ++c)
        if ((x.row(i) - r.centroids.row(c)).squaredNorm() < (x.row(i) - r.centroids.row(best)).squaredNorm()) best = c;
      CHECK(r.labels[static_cast<std::size_t>(i)] == best);
    }
  }
  CHECK(kmeans(x, 3, 4).labels == kmeans(x, 3, 4).labels);
  const auto same = kmeans(Matrix::Zero(5, 2), 3, 0);
  CHECK(same.labels.size() == 5);
  CHECK_THROWS_AS(kmeans(x, 0, 0), ParameterError);
  CHECK_THROWS_AS(kmeans(x, 91, 0), ParameterError);
}
