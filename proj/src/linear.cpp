#include <algorithm>
#include <cmath>

#include "connecto/learners.hpp"

namespace connecto::learners {

std::string to_string(Regularization r) {
  switch (r) {
    case Regularization::none: return "none";
    case Regularization::l0: return "l0";
    case Regularization::l1: return "l1";
    case Regularization::l2: return "l2";
    case Regularization::elastic: return "elastic";
    case Regularization::bayesian: return "bayesian";
    case Regularization::huber: return "huber";
    case Regularization::pls: return "pls";
  }
  return "unknown";
}

LinearModel::LinearModel(Vector weights, double intercept, Regularization reg)
    : weights_(std::move(weights)), intercept_(intercept), regularization_(reg) {
  if (!weights_.allFinite() || !std::isfinite(intercept_)) {
    throw DataError("linear model produced non-finite weights");
  }
}

Vector LinearModel::predict(const Matrix& x) const {
  if (x.cols() != weights_.size()) throw ShapeError("linear model input width mismatch");
  Vector out = x * weights_;
  out.array() += intercept_;
  return out;
}

Index LinearModel::nonzeros() const { return (weights_.array() != 0.0).count(); }

LinearMultiModel::LinearMultiModel(Matrix weights, Vector intercepts)
    : weights_(std::move(weights)), intercepts_(std::move(intercepts)) {
  if (weights_.cols() != intercepts_.size()) throw ShapeError("one intercept per output required");
  if (!weights_.allFinite() || !intercepts_.allFinite()) {
    throw DataError("linear model produced non-finite weights");
  }
}

Matrix LinearMultiModel::predict(const Matrix& x) const {
  if (x.cols() != weights_.rows()) throw ShapeError("linear model input width mismatch");
  Matrix out = x * weights_;
  out.rowwise() += intercepts_.transpose();
  return out;
}

LinearModel LinearMultiModel::column(Index j) const {
  return LinearModel(weights_.col(j), intercepts_(j), Regularization::none);
}

namespace {

void check_xy(const Matrix& x, Index y_rows) {
  if (x.rows() == 0) throw DataError("cannot fit on an empty table");
  if (x.rows() != y_rows) throw ShapeError("inputs and targets disagree on row count");
  if (!x.allFinite()) throw DataError("inputs contain non-finite values");
}

// Solves (Xc'Xc + lambda I) W = Xc'Yc, using the dual form when n < d.
Matrix regularized_solve(const Matrix& xc, const Matrix& yc, double lambda) {
  if (xc.cols() <= xc.rows()) {
    Matrix g = xc.transpose() * xc;
    g.diagonal().array() += lambda;
    return Eigen::LDLT<Matrix>(g).solve(xc.transpose() * yc);
  }
  Matrix k = xc * xc.transpose();
  k.diagonal().array() += lambda;
  return xc.transpose() * Eigen::LDLT<Matrix>(k).solve(yc);
}

}  // namespace

LinearMultiModel fit_ridge_multi(const Matrix& x, const Matrix& y, double lambda) {
  check_xy(x, y.rows());
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("ridge lambda must be >= 0");
  const Eigen::RowVectorXd xm = x.colwise().mean();
  const Eigen::RowVectorXd ym = y.colwise().mean();
  const Matrix xc = x.rowwise() - xm;
  const Matrix yc = y.rowwise() - ym;
  Matrix w;
  if (x.cols() == 0) {
    w = Matrix::Zero(0, y.cols());
  } else if (lambda > 0.0) {
    w = regularized_solve(xc, yc, lambda);
  } else {
    bool solved = false;
    if (xc.rows() > xc.cols()) {
      Eigen::ColPivHouseholderQR<Matrix> qr(xc);
      if (qr.rank() == xc.cols()) {
        w = qr.solve(yc);
        solved = true;
      }
    }
    if (!solved) {
      warn("least squares design is rank deficient; adding 1e-10 diagonal jitter");
      w = regularized_solve(xc, yc, kSingularJitter);
    }
  }
  Vector b = (ym - xm * w).transpose();
  return LinearMultiModel(std::move(w), std::move(b));
}

LinearModel fit_ols(const Matrix& x, const Vector& y) {
  auto multi = fit_ridge_multi(x, y, 0.0);
  return LinearModel(multi.weights().col(0), multi.intercepts()(0), Regularization::none);
}

LinearModel fit_ridge(const Matrix& x, const Vector& y, double lambda) {
  auto multi = fit_ridge_multi(x, y, lambda);
  return LinearModel(multi.weights().col(0), multi.intercepts()(0),
                     lambda > 0.0 ? Regularization::l2 : Regularization::none);
}

namespace {

struct Standardized {
  Matrix z;
  Eigen::RowVectorXd mean;
  Vector scale;  // 0 for constant columns
  Vector yc;
  double ymean = 0.0;
};

Standardized standardize(const Matrix& x, const Vector& y) {
  Standardized s;
  const double n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean();
  s.z = x.rowwise() - s.mean;
  s.scale = Vector::Zero(x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const double sd = std::sqrt(s.z.col(j).squaredNorm() / n);
    s.scale(j) = sd;
    if (sd > 0.0) {
      s.z.col(j) /= sd;
    } else {
      s.z.col(j).setZero();
    }
  }
  s.ymean = y.mean();
  s.yc = y.array() - s.ymean;
  return s;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// KKT violation of the standardised elastic-net problem at beta.
double kkt_violation(const Standardized& s, const Vector& beta, double alpha, double l1_ratio) {
  const double n = static_cast<double>(s.z.rows());
  const Vector r = s.yc - s.z * beta;
  const Vector corr = s.z.transpose() * r / n;
  double worst = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    if (s.scale(j) == 0.0) continue;
    const double g = -corr(j) + alpha * (1.0 - l1_ratio) * beta(j);
    const double l1 = alpha * l1_ratio;
    double v;
    if (beta(j) != 0.0) {
      v = std::abs(g + l1 * (beta(j) > 0.0 ? 1.0 : -1.0));
    } else {
      v = std::max(0.0, std::abs(g) - l1);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace

ElasticNetFit fit_elastic_net(const Matrix& x, const Vector& y, const ElasticNetParams& p) {
  check_xy(x, y.size());
  if (!(p.alpha > 0.0)) throw ParameterError("elastic-net alpha must be > 0");
  if (!(p.l1_ratio >= 0.0 && p.l1_ratio <= 1.0)) throw ParameterError("l1_ratio must lie in [0,1]");
  if (!(p.tol > 0.0) || p.max_iter < 1) throw ParameterError("elastic-net tol/max_iter invalid");

  const Standardized s = standardize(x, y);
  const Index d = x.cols();
  const double n = static_cast<double>(x.rows());
  const double l1 = p.alpha * p.l1_ratio;
  const double denom = 1.0 + p.alpha * (1.0 - p.l1_ratio);
  Vector beta = Vector::Zero(d);
  Vector r = s.yc;
  ElasticNetFit fit;
  for (Index it = 1; it <= p.max_iter; ++it) {
    double max_change = 0.0;
    for (Index j = 0; j < d; ++j) {
      if (s.scale(j) == 0.0) continue;
      const double old = beta(j);
      const double rho = s.z.col(j).dot(r) / n + old;  // z_j'z_j / n == 1
      const double updated = soft_threshold(rho, l1) / denom;
      if (updated != old) {
        r -= (updated - old) * s.z.col(j);
        beta(j) = updated;
        max_change = std::max(max_change, std::abs(updated - old));
      }
    }
    fit.iterations = it;
    if (max_change < p.tol && kkt_violation(s, beta, p.alpha, p.l1_ratio) < p.tol) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged) warn("elastic net did not converge within max_iter");
  Vector w = Vector::Zero(d);
  for (Index j = 0; j < d; ++j) {
    if (s.scale(j) > 0.0) w(j) = beta(j) / s.scale(j);
  }
  const double b = s.ymean - s.mean.dot(w);
  const auto reg = p.l1_ratio == 1.0 ? Regularization::l1 : Regularization::elastic;
  fit.model = LinearModel(std::move(w), b, reg);
  return fit;
}

double elastic_net_kkt_residual(const Matrix& x, const Vector& y, const LinearModel& model,
                                double alpha, double l1_ratio) {
  const Standardized s = standardize(x, y);
  Vector beta = model.weights().cwiseProduct(s.scale);
  return kkt_violation(s, beta, alpha, l1_ratio);
}

LinearModel fit_omp(const Matrix& x, const Vector& y, Index n_nonzero) {
  check_xy(x, y.size());
  const Index d = x.cols();
  if (n_nonzero < 1 || n_nonzero > d) {
    throw ParameterError("n_nonzero must lie in [1, " + std::to_string(d) + "]");
  }
  const Eigen::RowVectorXd xm = x.colwise().mean();
  const Matrix xc = x.rowwise() - xm;
  const double ym = y.mean();
  const Vector yc = y.array() - ym;
  const Vector norms = xc.colwise().norm().transpose();
  const double stop = 1e-12 * std::max(yc.norm(), 1e-300);

  std::vector<Index> active;
  std::vector<bool> used(static_cast<std::size_t>(d), false);
  Vector coef_active;
  Vector residual = yc;
  for (Index step = 0; step < n_nonzero; ++step) {
    if (residual.norm() <= stop) break;
    Index best = -1;
    double best_score = 0.0;
    for (Index j = 0; j < d; ++j) {
      if (used[static_cast<std::size_t>(j)] || norms(j) == 0.0) continue;
      const double score = std::abs(xc.col(j).dot(residual)) / norms(j);
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    if (best < 0) break;
    active.push_back(best);
    used[static_cast<std::size_t>(best)] = true;
    const Matrix xa = take_cols(xc, active);
    coef_active = Eigen::ColPivHouseholderQR<Matrix>(xa).solve(yc);
    residual = yc - xa * coef_active;
  }
  Vector w = Vector::Zero(d);
  for (std::size_t a = 0; a < active.size(); ++a) w(active[a]) = coef_active(static_cast<Index>(a));
  return LinearModel(std::move(w), ym - xm.dot(w), Regularization::l0);
}

LinearModel fit_pls1(const Matrix& x, const Vector& y, Index n_components) {
  check_xy(x, y.size());
  if (n_components < 1) throw ParameterError("PLS needs n_components >= 1");
  const Index d = x.cols();
  const Eigen::RowVectorXd xm = x.colwise().mean();
  Matrix xr = x.rowwise() - xm;
  const double ym = y.mean();
  Vector yr = y.array() - ym;
  const double scale = std::max(xr.norm() * std::max(yr.norm(), 1.0), 1e-300);

  const Index max_a = std::min(n_components, d);
  Matrix w_mat(d, max_a);
  Matrix p_mat(d, max_a);
  Vector q(max_a);
  Index a = 0;
  for (; a < max_a; ++a) {
    Vector w = xr.transpose() * yr;
    const double wn = w.norm();
    if (wn <= 1e-12 * scale) break;
    w /= wn;
    const Vector t = xr * w;
    const double tt = t.squaredNorm();
    if (tt == 0.0) break;
    const Vector p = xr.transpose() * t / tt;
    const double qa = yr.dot(t) / tt;
    xr -= t * p.transpose();
    yr -= qa * t;
    w_mat.col(a) = w;
    p_mat.col(a) = p;
    q(a) = qa;
  }
  Vector b = Vector::Zero(d);
  if (a > 0) {
    const Matrix w_a = w_mat.leftCols(a);
    const Matrix ptw = p_mat.leftCols(a).transpose() * w_a;
    b = w_a * ptw.partialPivLu().solve(q.head(a));
  }
  return LinearModel(b, ym - xm.dot(b), Regularization::pls);
}

}  // namespace connecto::learners
