#include "connecto/dimred.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "connecto/eval.hpp"
#include "connecto/kernels.hpp"

namespace connecto::dimred {

Matrix Projection::project(const Matrix& x) const {
  if (x.cols() != d()) throw ShapeError("projection input width mismatch");
  return (x.rowwise() - center.transpose()) * components.transpose();
}

Matrix Projection::reconstruct(const Matrix& z) const {
  if (z.cols() != k()) throw ShapeError("reconstruction input width mismatch");
  Matrix out = z * components;
  out.rowwise() += center.transpose();
  return out;
}

namespace {

Projection fit_projection(const Matrix& x, Index k, ProjectionKind kind) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (n == 0 || d == 0) throw DataError("cannot fit a projection on an empty table");
  if (k < 1 || k > std::min(n, d)) {
    throw ParameterError("k=" + std::to_string(k) + " outside [1, " + std::to_string(std::min(n, d)) + "]");
  }
  Projection p;
  p.kind = kind;
  p.center = kind == ProjectionKind::pca ? Vector(x.colwise().mean().transpose()) : Vector::Zero(d);
  const Matrix xc = x.rowwise() - p.center.transpose();
  Eigen::BDCSVD<Matrix> svd(xc, Eigen::ComputeThinV);
  p.components = svd.matrixV().leftCols(k).transpose();
  for (Index c = 0; c < k; ++c) {
    Index arg = 0;
    for (Index j = 1; j < d; ++j) {
      if (std::abs(p.components(c, j)) > std::abs(p.components(c, arg))) arg = j;
    }
    if (p.components(c, arg) < 0.0) p.components.row(c) *= -1.0;
  }
  const double nd = static_cast<double>(n);
  const double total = kernels::column_moments(x).variance.sum();
  if (kind == ProjectionKind::pca) {
    p.explained_variance = svd.singularValues().head(k).array().square() / nd;
  } else {
    const Matrix z = x * p.components.transpose();
    p.explained_variance = kernels::column_moments(z).variance;
  }
  p.explained_variance_ratio =
      total > 0.0 ? Vector(p.explained_variance / total) : Vector(Vector::Zero(k));
  return p;
}

std::vector<Index> top_k(const Vector& scores, Index k) {
  std::vector<Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return scores(a) > scores(b); });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

preprocess::FeatureMask mask_of(Index d, const std::vector<Index>& cols) {
  preprocess::FeatureMask m;
  m.keep.assign(static_cast<std::size_t>(d), false);
  for (Index c : cols) m.keep[static_cast<std::size_t>(c)] = true;
  return m;
}

Vector mi_scores(const Matrix& x, const Vector& y, Index bins) {
  Vector scores = Vector::Zero(x.cols());
  if ((y.array() == y(0)).all()) {
    warn("target is constant; mutual information scores are all zero");
    return scores;
  }
  kernels::parallel_for(x.cols(), [&](Index j) { scores(j) = binned_mutual_information(x.col(j), y, bins); });
  return scores;
}

}  // namespace

Projection fit_pca(const Matrix& x, Index k) { return fit_projection(x, k, ProjectionKind::pca); }
Projection fit_tsvd(const Matrix& x, Index k) { return fit_projection(x, k, ProjectionKind::tsvd); }

SelectionReport variance_threshold(const Matrix& x, const VarianceThresholdParams& p) {
  if (p.threshold && p.drop_lowest) throw ParameterError("give either threshold or drop_lowest, not both");
  if (x.rows() < 2) throw InsufficientDataError("variance threshold needs at least 2 rows");
  const Index d = x.cols();
  SelectionReport rep;
  rep.method = "variance_threshold";
  rep.scores = kernels::column_moments(x).variance;
  if (p.drop_lowest) {
    const Index m = *p.drop_lowest;
    if (m < 0 || m >= d) throw ParameterError("drop_lowest must lie in [0, d)");
    std::vector<Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return rep.scores(a) < rep.scores(b); });
    rep.selected = preprocess::FeatureMask::all(d);
    for (Index i = 0; i < m; ++i) rep.selected.keep[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = false;
    return rep;
  }
  const double thr = p.threshold.value_or(0.0);
  if (!(thr >= 0.0)) throw ParameterError("variance threshold must be >= 0");
  rep.selected.keep.resize(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) rep.selected.keep[static_cast<std::size_t>(j)] = rep.scores(j) > thr;
  if (rep.selected.kept() == 0) throw DataError("variance threshold removed every feature");
  return rep;
}

std::vector<Index> equal_frequency_bins(const Vector& v, Index bins) {
  const Index n = v.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return v(a) < v(b); });
  std::vector<Index> out(static_cast<std::size_t>(n));
  Index group_bin = 0;
  for (Index r = 0; r < n; ++r) {
    const Index idx = order[static_cast<std::size_t>(r)];
    if (r == 0 || v(idx) != v(order[static_cast<std::size_t>(r - 1)])) group_bin = r * bins / n;
    out[static_cast<std::size_t>(idx)] = group_bin;
  }
  return out;
}

double binned_mutual_information(const Vector& a, const Vector& b, Index bins) {
  if (a.size() != b.size()) throw ShapeError("mutual information needs equal-length vectors");
  if (bins < 2) throw ParameterError("bins must be >= 2");
  const Index n = a.size();
  if (n < bins) throw InsufficientDataError("mutual information needs at least `bins` rows");
  const auto ba = equal_frequency_bins(a, bins);
  const auto bb = equal_frequency_bins(b, bins);
  Matrix joint = Matrix::Zero(bins, bins);
  for (Index i = 0; i < n; ++i) joint(ba[static_cast<std::size_t>(i)], bb[static_cast<std::size_t>(i)]) += 1.0;
  const Vector pa = joint.rowwise().sum();
  const Vector pb = joint.colwise().sum().transpose();
  const double nd = static_cast<double>(n);
  double mi = 0.0;
  for (Index i = 0; i < bins; ++i) {
    for (Index j = 0; j < bins; ++j) {
      const double c = joint(i, j);
      if (c > 0.0) mi += c / nd * std::log(c * nd / (pa(i) * pb(j)));
    }
  }
  return std::max(mi, 0.0);
}

SelectionReport select_k_best_mi(const Matrix& x, const Vector& y, Index k, Index bins) {
  if (x.rows() != y.size()) throw ShapeError("inputs and targets disagree on row count");
  if (k < 1 || k > x.cols()) throw ParameterError("k must lie in [1, d]");
  if (x.rows() < bins) throw InsufficientDataError("select-k-best needs at least `bins` rows");
  SelectionReport rep;
  rep.method = "select_k_best";
  rep.scores = mi_scores(x, y, bins);
  rep.selected = mask_of(x.cols(), top_k(rep.scores, k));
  return rep;
}

Index percentile_count(Index d, double percentile) {
  if (!(percentile > 0.0 && percentile <= 100.0)) throw ParameterError("percentile must lie in (0, 100]");
  const auto k = static_cast<Index>(std::floor(static_cast<double>(d) * percentile / 100.0 + 1e-9));
  return std::clamp<Index>(k, 1, d);
}

SelectionReport generic_univariate_select(const Matrix& x, const Vector& y,
                                          const UnivariateCandidates& cand, Index cv_folds,
                                          const FitPredict& learner, std::uint64_t seed, Index bins) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (n != y.size()) throw ShapeError("inputs and targets disagree on row count");
  if (cand.k_values.empty() && cand.percentiles.empty()) throw ParameterError("empty candidate grid");
  if (cv_folds < 2 || cv_folds > n) throw ParameterError("cv_folds must lie in [2, rows]");
  std::vector<Index> counts;
  for (Index k : cand.k_values) {
    if (k < 1 || k > d) throw ParameterError("candidate k must lie in [1, d]");
    counts.push_back(k);
  }
  for (double p : cand.percentiles) counts.push_back(percentile_count(d, p));

  Index winner = counts.front();
  if (counts.size() > 1) {
    const auto folds = eval::kfold_split(n, cv_folds, seed);
    std::vector<double> abs_err(counts.size(), 0.0);
    for (Index f = 0; f < cv_folds; ++f) {
      std::vector<Index> tr;
      std::vector<Index> te;
      for (Index i = 0; i < n; ++i) (folds[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
      const Matrix xtr = take_rows(x, tr);
      const Vector ytr = take_rows(y, tr);
      const Matrix xte = take_rows(x, te);
      const Vector yte = take_rows(y, te);
      if (xtr.rows() < bins) throw InsufficientDataError("fold too small for the MI binning");
      const Vector scores = mi_scores(xtr, ytr, bins);
      for (std::size_t c = 0; c < counts.size(); ++c) {
        const auto cols = top_k(scores, counts[c]);
        std::vector<Index> sorted = cols;
        std::sort(sorted.begin(), sorted.end());
        const Vector pred = learner(take_cols(xtr, sorted), ytr, take_cols(xte, sorted));
        abs_err[c] += (pred - yte).cwiseAbs().sum();
      }
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < counts.size(); ++c) {
      if (abs_err[c] < abs_err[best]) best = c;
    }
    winner = counts[best];
  }
  SelectionReport rep = select_k_best_mi(x, y, winner, bins);
  rep.method = "generic_univariate_select";
  return rep;
}

SelectionReport backward_elimination(const Matrix& x, const Vector& y, const BackwardEliminationParams& p) {
  if (!(p.p_threshold > 0.0 && p.p_threshold < 1.0)) throw ParameterError("p_threshold must lie in (0, 1)");
  if (x.rows() != y.size()) throw ShapeError("inputs and targets disagree on row count");
  const Index n = x.rows();
  const Index d = x.cols();
  SelectionReport rep;
  rep.method = "backward_elimination";
  rep.scores = Vector::Ones(d);
  rep.selected = preprocess::FeatureMask::all(d);
  const Index limit = p.max_rounds < 0 ? d : p.max_rounds;
  const Vector yc = y.array() - y.mean();

  for (Index round = 0; round <= limit; ++round) {
    const auto active = rep.selected.kept_columns();
    const Index m = static_cast<Index>(active.size());
    if (m == 0 || n - m - 1 < 1) break;
    Matrix xa = take_cols(x, active);
    xa.rowwise() -= xa.colwise().mean();
    Matrix gram = xa.transpose() * xa;
    Eigen::ColPivHouseholderQR<Matrix> qr(xa);
    if (qr.rank() < m) {
      warn("backward elimination design is singular; using a 1e-8 ridge fallback");
      gram.diagonal().array() += 1e-8;
    }
    const Eigen::LDLT<Matrix> ldlt(gram);
    const Vector w = ldlt.solve(xa.transpose() * yc);
    const Matrix inv = ldlt.solve(Matrix::Identity(m, m));
    const double dof = static_cast<double>(n - m - 1);
    const double sigma2 = (yc - xa * w).squaredNorm() / dof;
    Index worst = -1;
    double worst_p = p.p_threshold;
    for (Index a = 0; a < m; ++a) {
      const double se = std::sqrt(std::max(sigma2 * inv(a, a), 0.0));
      double pv;
      if (se > 0.0) {
        pv = eval::student_t_two_tailed(w(a) / se, dof);
      } else {
        pv = w(a) == 0.0 ? 1.0 : 0.0;
      }
      rep.scores(active[static_cast<std::size_t>(a)]) = pv;
      if (pv > worst_p) {
        worst_p = pv;
        worst = a;
      }
    }
    if (worst < 0 || round == limit || m == 1) break;
    rep.selected.keep[static_cast<std::size_t>(active[static_cast<std::size_t>(worst)])] = false;
  }
  if (rep.selected.kept() == 0) throw DataError("backward elimination removed every feature");
  return rep;
}

}  // namespace connecto::dimred
