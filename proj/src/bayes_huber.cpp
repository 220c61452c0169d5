#include <algorithm>
#include <cmath>
#include <limits>

#include "connecto/learners.hpp"

namespace connecto::learners {

BayesianLinearModel::BayesianLinearModel(LinearModel base, double alpha, double lambda,
                                         Vector posterior_variance, bool converged, Index iterations)
    : LinearModel(std::move(base)),
      alpha_(alpha),
      lambda_(lambda),
      posterior_variance_(std::move(posterior_variance)),
      converged_(converged),
      iterations_(iterations) {}

BayesianLinearModel fit_bayesian_ridge(const Matrix& x, const Vector& y, const BayesianRidgeParams& p) {
  if (x.rows() == 0) throw DataError("cannot fit on an empty table");
  if (x.rows() != y.size()) throw ShapeError("inputs and targets disagree on row count");
  if (p.max_iter < 1 || !(p.tol > 0.0)) throw ParameterError("bayesian ridge max_iter/tol invalid");
  const Index n = x.rows();
  const Index d = x.cols();
  const Eigen::RowVectorXd xm = x.colwise().mean();
  const Matrix xc = x.rowwise() - xm;
  const double ym = y.mean();
  const Vector yc = y.array() - ym;

  Eigen::BDCSVD<Matrix> svd(xc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector s2 = svd.singularValues().array().square();
  const Matrix& u = svd.matrixU();
  const Matrix& v = svd.matrixV();
  const Vector uty = u.transpose() * yc;

  const double var_y = yc.squaredNorm() / static_cast<double>(n);
  double alpha = 1.0 / (var_y + std::numeric_limits<double>::epsilon());
  double lambda = 1.0;

  auto solve_coef = [&](double a, double l) {
    // (X'X + l/a I)^-1 X'y through the thin SVD of the centred design.
    const Vector shrink = svd.singularValues().array() / (s2.array() + l / a);
    return Vector(v * shrink.cwiseProduct(uty));
  };

  Vector coef = Vector::Zero(d);
  Vector coef_old = coef;
  bool converged = false;
  Index iterations = 0;
  for (Index it = 0; it < p.max_iter; ++it) {
    coef = solve_coef(alpha, lambda);
    const double rss = (yc - xc * coef).squaredNorm();
    const double gamma = (alpha * s2.array() / (lambda + alpha * s2.array())).sum();
    lambda = (gamma + 2.0 * p.lambda_1) / (coef.squaredNorm() + 2.0 * p.lambda_2);
    alpha = (static_cast<double>(n) - gamma + 2.0 * p.alpha_1) / (rss + 2.0 * p.alpha_2);
    iterations = it + 1;
    if (it != 0 && (coef_old - coef).cwiseAbs().sum() < p.tol) {
      converged = true;
      break;
    }
    coef_old = coef;
  }
  if (!converged) warn("bayesian ridge did not converge within max_iter");
  coef = solve_coef(alpha, lambda);

  // Posterior covariance (alpha X'X + lambda I)^-1, diagonal only; directions
  // outside the row space keep the prior variance 1 / lambda.
  Vector post(d);
  for (Index j = 0; j < d; ++j) {
    double in_span = 0.0;
    double acc = 0.0;
    for (Index k = 0; k < v.cols(); ++k) {
      const double vjk2 = v(j, k) * v(j, k);
      in_span += vjk2;
      acc += vjk2 / (alpha * s2(k) + lambda);
    }
    post(j) = acc + std::max(0.0, 1.0 - in_span) / lambda;
  }
  LinearModel base(coef, ym - xm.dot(coef), Regularization::bayesian);
  return BayesianLinearModel(std::move(base), alpha, lambda, std::move(post), converged, iterations);
}

namespace {

struct HuberTerms {
  double value = 0.0;
  Vector grad;  // (w, b, sigma)
};

HuberTerms huber_terms(const Matrix& x, const Vector& y, const Vector& w, double b, double sigma,
                       double eps, double lambda, bool with_grad) {
  const Index d = x.cols();
  HuberTerms t;
  if (!(sigma > 0.0)) {
    t.value = std::numeric_limits<double>::infinity();
    return t;
  }
  const Vector r = y - x * w - Vector::Constant(y.size(), b);
  Vector psi(r.size());
  double dsigma = 0.0;
  double value = 0.0;
  for (Index i = 0; i < r.size(); ++i) {
    const double ri = r(i);
    if (std::abs(ri) <= eps * sigma) {
      value += sigma + ri * ri / sigma;
      psi(i) = 2.0 * ri / sigma;
      dsigma += 1.0 - ri * ri / (sigma * sigma);
    } else {
      value += sigma + 2.0 * eps * std::abs(ri) - eps * eps * sigma;
      psi(i) = 2.0 * eps * (ri > 0.0 ? 1.0 : -1.0);
      dsigma += 1.0 - eps * eps;
    }
  }
  t.value = value + lambda * w.squaredNorm();
  if (with_grad) {
    t.grad.resize(d + 2);
    t.grad.head(d) = -(x.transpose() * psi) + 2.0 * lambda * w;
    t.grad(d) = -psi.sum();
    t.grad(d + 1) = dsigma;
  }
  return t;
}

// Derivative of the objective in sigma for fixed residuals; nondecreasing.
double sigma_slope(const Vector& r, double sigma, double eps) {
  double s = 0.0;
  for (Index i = 0; i < r.size(); ++i) {
    const double ri = r(i);
    s += std::abs(ri) <= eps * sigma ? 1.0 - ri * ri / (sigma * sigma) : 1.0 - eps * eps;
  }
  return s;
}

double optimal_sigma(const Vector& r, double eps, double sigma_min) {
  if (sigma_slope(r, sigma_min, eps) >= 0.0) return sigma_min;
  double lo = sigma_min;
  double hi = std::max({r.cwiseAbs().maxCoeff() / eps, std::sqrt(r.squaredNorm() / static_cast<double>(r.size())), sigma_min}) * 2.0;
  while (sigma_slope(r, hi, eps) < 0.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (sigma_slope(r, mid, eps) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

}  // namespace

double huber_objective(const Matrix& x, const Vector& y, const Vector& theta, double epsilon,
                       double lambda) {
  const Index d = x.cols();
  if (theta.size() != d + 2) throw ShapeError("huber parameter vector must hold w, b, sigma");
  return huber_terms(x, y, theta.head(d), theta(d), theta(d + 1), epsilon, lambda, false).value;
}

Vector huber_gradient(const Matrix& x, const Vector& y, const Vector& theta, double epsilon,
                      double lambda) {
  const Index d = x.cols();
  if (theta.size() != d + 2) throw ShapeError("huber parameter vector must hold w, b, sigma");
  return huber_terms(x, y, theta.head(d), theta(d), theta(d + 1), epsilon, lambda, true).grad;
}

HuberFit fit_huber(const Matrix& x, const Vector& y, const HuberParams& p) {
  if (x.rows() == 0) throw DataError("cannot fit on an empty table");
  if (x.rows() != y.size()) throw ShapeError("inputs and targets disagree on row count");
  if (!(p.epsilon > 1.0)) throw ParameterError("huber epsilon must be > 1");
  if (!(p.lambda >= 0.0) || !(p.tol > 0.0) || p.max_iter < 1) {
    throw ParameterError("huber lambda/tol/max_iter invalid");
  }
  const Index n = x.rows();
  const Index d = x.cols();
  const double nd = static_cast<double>(n);

  std::vector<double> ys(y.data(), y.data() + n);
  std::nth_element(ys.begin(), ys.begin() + n / 2, ys.end());
  const double median = ys[static_cast<std::size_t>(n / 2)];
  const double spread = (y.array() - median).abs().mean();
  HuberFit fit;
  if (spread == 0.0) {
    fit.model = LinearModel(Vector::Zero(d), median, Regularization::huber);
    fit.scale = 0.0;
    fit.converged = true;
    return fit;
  }
  const double sigma_min = 1e-10 * spread;

  Vector w = Vector::Zero(d);
  double b = median;
  double sigma = optimal_sigma(y.array() - b, p.epsilon, sigma_min);

  Matrix design(n, d + 1);
  design.leftCols(d) = x;
  design.col(d).setOnes();

  for (Index outer = 1; outer <= p.max_iter; ++outer) {
    // Newton on (w, b) with sigma fixed; the objective is piecewise quadratic.
    for (int inner = 0; inner < 100; ++inner) {
      const auto cur = huber_terms(x, y, w, b, sigma, p.epsilon, p.lambda, true);
      const Vector g = cur.grad.head(d + 1);
      if (g.cwiseAbs().maxCoeff() / nd < 0.1 * p.tol) break;
      const Vector r = y - design.leftCols(d) * w - Vector::Constant(n, b);
      Matrix h = Matrix::Zero(d + 1, d + 1);
      for (Index i = 0; i < n; ++i) {
        if (std::abs(r(i)) <= p.epsilon * sigma) {
          h.selfadjointView<Eigen::Lower>().rankUpdate(design.row(i).transpose(), 2.0 / sigma);
        }
      }
      h = h.selfadjointView<Eigen::Lower>();
      for (Index j = 0; j < d; ++j) h(j, j) += 2.0 * p.lambda;
      const double jitter = 1e-12 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
      h.diagonal().array() += jitter;
      const Vector step = -Eigen::LDLT<Matrix>(h).solve(g);
      double t = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Vector nw = w + t * step.head(d);
        const double nb = b + t * step(d);
        const double val = huber_terms(x, y, nw, nb, sigma, p.epsilon, p.lambda, false).value;
        if (val <= cur.value + 1e-4 * t * g.dot(step)) {
          w = nw;
          b = nb;
          moved = true;
          break;
        }
        t *= 0.5;
      }
      if (!moved) break;
    }
    const Vector r = y - x * w - Vector::Constant(n, b);
    sigma = optimal_sigma(r, p.epsilon, sigma_min);

    const auto cur = huber_terms(x, y, w, b, sigma, p.epsilon, p.lambda, true);
    double gnorm = cur.grad.head(d + 1).cwiseAbs().maxCoeff();
    const double gs = cur.grad(d + 1);
    if (!(sigma <= sigma_min && gs > 0.0)) gnorm = std::max(gnorm, std::abs(gs));
    fit.gradient_norm = gnorm / nd;
    fit.iterations = outer;
    if (fit.gradient_norm < p.tol) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged) warn("huber regression did not reach the gradient tolerance");
  fit.model = LinearModel(std::move(w), b, Regularization::huber);
  fit.scale = sigma;
  return fit;
}

}  // namespace connecto::learners
