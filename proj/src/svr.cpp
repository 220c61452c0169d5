#include <algorithm>
#include <cmath>
#include <limits>

#include "connecto/kernels.hpp"
#include "connecto/learners.hpp"

namespace connecto::learners {

double Kernel::eval(const double* a, const double* b, Index d, double g) const {
  if (type == KernelType::linear) {
    double s = 0.0;
    for (Index k = 0; k < d; ++k) s += a[k] * b[k];
    return s;
  }
  double s = 0.0;
  for (Index k = 0; k < d; ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return std::exp(-g * s);
}

double resolve_gamma(const Kernel& kernel, Index n_features) {
  if (kernel.gamma >= 0.0) return kernel.gamma;
  return 1.0 / static_cast<double>(std::max<Index>(n_features, 1));
}

Matrix kernel_matrix(const Matrix& a, const Matrix& b, const Kernel& kernel, double gamma) {
  if (a.cols() != b.cols()) throw ShapeError("kernel operands differ in width");
  if (kernel.type == KernelType::linear) return a * b.transpose();
  Matrix k = kernels::pairwise_sq_distances(a, b);
  return (-gamma * k.array()).exp().matrix();
}

namespace {

constexpr double kTau = 1e-12;

void check_svr_params(const SvrParams& p) {
  if (!(p.c > 0.0)) throw ParameterError("SVR C must be > 0");
  if (!(p.epsilon >= 0.0)) throw ParameterError("SVR epsilon must be >= 0");
  if (!(p.tol > 0.0) || p.max_iter < 1) throw ParameterError("SVR tol/max_iter invalid");
}

}  // namespace

SvrDual solve_svr_dual(const Matrix& gram, const Vector& z, const SvrParams& p) {
  check_svr_params(p);
  const Index n = z.size();
  if (gram.rows() != n || gram.cols() != n) throw ShapeError("gram matrix must be n x n");
  const Index l = 2 * n;
  const double c = p.c;
  // Doubled variable set: t < n carries alpha (sign +1), t >= n alpha* (sign -1).
  auto sign = [n](Index t) { return t < n ? 1.0 : -1.0; };
  auto base = [n](Index t) { return t < n ? t : t - n; };
  auto q = [&](Index i, Index j) { return sign(i) * sign(j) * gram(base(i), base(j)); };

  Vector alpha = Vector::Zero(l);
  Vector grad(l);
  for (Index t = 0; t < l; ++t) grad(t) = t < n ? p.epsilon - z(t) : p.epsilon + z(t - n);

  SvrDual out;
  Index it = 0;
  for (; it < p.max_iter; ++it) {
    // Second-order working-set selection.
    double gmax = -std::numeric_limits<double>::infinity();
    Index i = -1;
    for (Index t = 0; t < l; ++t) {
      if (sign(t) > 0) {
        if (alpha(t) < c && -grad(t) >= gmax) {
          gmax = -grad(t);
          i = t;
        }
      } else if (alpha(t) > 0.0 && grad(t) >= gmax) {
        gmax = grad(t);
        i = t;
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    Index j = -1;
    double obj_min = std::numeric_limits<double>::infinity();
    if (i >= 0) {
      const double qii = gram(base(i), base(i));
      for (Index t = 0; t < l; ++t) {
        const double qtt = gram(base(t), base(t));
        const double qit = q(i, t);
        if (sign(t) > 0) {
          if (alpha(t) > 0.0) {
            const double diff = gmax + grad(t);
            gmax2 = std::max(gmax2, grad(t));
            if (diff > 0.0) {
              double quad = qii + qtt - 2.0 * sign(i) * qit;
              if (quad <= 0.0) quad = kTau;
              const double obj = -(diff * diff) / quad;
              if (obj <= obj_min) {
                j = t;
                obj_min = obj;
              }
            }
          }
        } else if (alpha(t) < c) {
          const double diff = gmax - grad(t);
          gmax2 = std::max(gmax2, -grad(t));
          if (diff > 0.0) {
            double quad = qii + qtt + 2.0 * sign(i) * qit;
            if (quad <= 0.0) quad = kTau;
            const double obj = -(diff * diff) / quad;
            if (obj <= obj_min) {
              j = t;
              obj_min = obj;
            }
          }
        }
      }
    }
    if (i < 0 || j < 0 || gmax + gmax2 < p.tol) {
      out.converged = true;
      break;
    }

    const double old_i = alpha(i);
    const double old_j = alpha(j);
    const double qij = q(i, j);
    const double qii = gram(base(i), base(i));
    const double qjj = gram(base(j), base(j));
    if (sign(i) != sign(j)) {
      double quad = qii + qjj + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0.0) {
        if (alpha(j) < 0.0) {
          alpha(j) = 0.0;
          alpha(i) = diff;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = -diff;
      }
      if (diff > 0.0) {
        if (alpha(i) > c) {
          alpha(i) = c;
          alpha(j) = c - diff;
        }
      } else if (alpha(j) > c) {
        alpha(j) = c;
        alpha(i) = c + diff;
      }
    } else {
      double quad = qii + qjj - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > c) {
        if (alpha(i) > c) {
          alpha(i) = c;
          alpha(j) = sum - c;
        }
      } else if (alpha(j) < 0.0) {
        alpha(j) = 0.0;
        alpha(i) = sum;
      }
      if (sum > c) {
        if (alpha(j) > c) {
          alpha(j) = c;
          alpha(i) = sum - c;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = sum;
      }
    }
    const double di = alpha(i) - old_i;
    const double dj = alpha(j) - old_j;
    for (Index t = 0; t < l; ++t) grad(t) += q(i, t) * di + q(j, t) * dj;
  }
  out.iterations = it;
  if (!out.converged) warn("SVR solver hit max_iter before reaching the KKT tolerance");

  // Offset from free variables, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  Index n_free = 0;
  for (Index t = 0; t < l; ++t) {
    const double yg = sign(t) * grad(t);
    if (alpha(t) >= c) {
      if (sign(t) < 0) {
        ub = std::min(ub, yg);
      } else {
        lb = std::max(lb, yg);
      }
    } else if (alpha(t) <= 0.0) {
      if (sign(t) > 0) {
        ub = std::min(ub, yg);
      } else {
        lb = std::max(lb, yg);
      }
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  out.coefficients = alpha.head(n) - alpha.tail(n);
  out.bias = -rho;
  return out;
}

KernelModel::KernelModel(Matrix support, Vector coefficients, double bias, Kernel kernel, double gamma,
                         double c, double epsilon)
    : support_(std::move(support)),
      coefficients_(std::move(coefficients)),
      bias_(bias),
      kernel_(kernel),
      gamma_(gamma),
      c_(c),
      epsilon_(epsilon) {
  if (support_.rows() != coefficients_.size()) throw ShapeError("one coefficient per support vector");
  if (!coefficients_.allFinite() || !std::isfinite(bias_)) throw DataError("SVR produced non-finite values");
}

Vector KernelModel::predict(const Matrix& x) const {
  if (support_.rows() == 0) return Vector::Constant(x.rows(), bias_);
  if (x.cols() != support_.cols()) throw ShapeError("SVR input width mismatch");
  Vector out = kernel_matrix(x, support_, kernel_, gamma_) * coefficients_;
  out.array() += bias_;
  return out;
}

Vector KernelModel::linear_weights() const {
  if (kernel_.type != KernelType::linear) throw ParameterError("primal weights need the linear kernel");
  if (support_.rows() == 0) return Vector::Zero(support_.cols());
  return support_.transpose() * coefficients_;
}

KernelModel fit_svr(const Matrix& x, const Vector& y, const SvrParams& p) {
  check_svr_params(p);
  if (x.rows() == 0) throw DataError("cannot fit on an empty table");
  if (x.rows() != y.size()) throw ShapeError("inputs and targets disagree on row count");
  const double gamma = resolve_gamma(p.kernel, x.cols());
  const Matrix gram = kernel_matrix(x, x, p.kernel, gamma);
  const SvrDual dual = solve_svr_dual(gram, y, p);
  std::vector<Index> support;
  for (Index i = 0; i < x.rows(); ++i) {
    if (dual.coefficients(i) != 0.0) support.push_back(i);
  }
  return KernelModel(take_rows(x, support), take_rows(dual.coefficients, support), dual.bias, p.kernel,
                     gamma, p.c, p.epsilon);
}

KernelMultiModel::KernelMultiModel(Matrix train, Matrix coefficients, Vector bias, Kernel kernel,
                                   double gamma)
    : train_(std::move(train)),
      coefficients_(std::move(coefficients)),
      bias_(std::move(bias)),
      kernel_(kernel),
      gamma_(gamma) {
  if (train_.rows() != coefficients_.rows() || coefficients_.cols() != bias_.size()) {
    throw ShapeError("kernel multi-model shape mismatch");
  }
}

Matrix KernelMultiModel::predict(const Matrix& x) const {
  if (x.cols() != train_.cols()) throw ShapeError("SVR input width mismatch");
  Matrix out = kernel_matrix(x, train_, kernel_, gamma_) * coefficients_;
  out.rowwise() += bias_.transpose();
  return out;
}

KernelMultiModel fit_svr_multi(const Matrix& x, const Matrix& y, const SvrParams& p) {
  check_svr_params(p);
  if (x.rows() == 0) throw DataError("cannot fit on an empty table");
  if (x.rows() != y.rows()) throw ShapeError("inputs and targets disagree on row count");
  const double gamma = resolve_gamma(p.kernel, x.cols());
  const Matrix gram = kernel_matrix(x, x, p.kernel, gamma);
  Matrix coef(x.rows(), y.cols());
  Vector bias(y.cols());
  kernels::parallel_for(y.cols(), [&](Index j) {
    const SvrDual dual = solve_svr_dual(gram, y.col(j), p);
    coef.col(j) = dual.coefficients;
    bias(j) = dual.bias;
  });
  return KernelMultiModel(x, std::move(coef), std::move(bias), p.kernel, gamma);
}

}  // namespace connecto::learners
