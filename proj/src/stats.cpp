#include <cmath>
#include <limits>

#include "connecto/eval.hpp"

namespace connecto::eval {

namespace {

// Continued fraction for I_x(a, b), evaluated with the modified Lentz method.
double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  warn("incomplete beta continued fraction did not converge");
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw ParameterError("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw ParameterError("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_tailed(double t, double dof) {
  if (!(dof > 0.0)) throw ParameterError("t distribution needs dof > 0");
  if (std::isnan(t)) throw DataError("t statistic is NaN");
  if (std::isinf(t)) return 0.0;
  return regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
}

double student_t_cdf(double t, double dof) {
  const double tail = student_t_two_tailed(t, dof) / 2.0;
  return t < 0.0 ? tail : 1.0 - tail;
}

TTestResult paired_ttest(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw ShapeError("paired t-test needs equal-length samples");
  const Index n = a.size();
  if (n < 2) throw InsufficientDataError("paired t-test needs at least 2 pairs");
  const Vector d = a - b;
  TTestResult r;
  r.dof = static_cast<double>(n - 1);
  r.mean_difference = d.mean();
  const double var = (d.array() - r.mean_difference).square().sum() / r.dof;
  if (var == 0.0) {
    r.t = r.mean_difference == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), r.mean_difference);
    r.p = r.mean_difference == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.t = r.mean_difference / std::sqrt(var / static_cast<double>(n));
  r.p = student_t_two_tailed(r.t, r.dof);
  return r;
}

Matrix paired_ttest_matrix(const std::vector<Vector>& errors) {
  const Index m = static_cast<Index>(errors.size());
  Matrix p = Matrix::Ones(m, m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      p(i, j) = paired_ttest(errors[static_cast<std::size_t>(i)], errors[static_cast<std::size_t>(j)]).p;
      p(j, i) = p(i, j);
    }
  }
  return p;
}

}  // namespace connecto::eval
