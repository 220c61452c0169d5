#include <algorithm>
#include <cmath>
#include <numeric>

#include "connecto/eval.hpp"
#include "connecto/kernels.hpp"

namespace connecto::eval {

namespace {

void check_same_shape(const Matrix& pred, const Matrix& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
    throw ShapeError("prediction is " + std::to_string(pred.rows()) + "x" + std::to_string(pred.cols()) +
                     " but truth is " + std::to_string(truth.rows()) + "x" + std::to_string(truth.cols()));
  }
  if (pred.size() == 0) throw ShapeError("cannot score empty tables");
}

double correlation(const double* a, const double* b, Index n, bool& degenerate) {
  const double ma = kernels::compensated_sum(a, n) / static_cast<double>(n);
  const double mb = kernels::compensated_sum(b, n) / static_cast<double>(n);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  degenerate = !(saa > 0.0) || !(sbb > 0.0);
  if (degenerate) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace

double mae(const Matrix& pred, const Matrix& truth) {
  check_same_shape(pred, truth);
  const Matrix d = (pred - truth).cwiseAbs();
  return kernels::compensated_sum(d.data(), d.size()) / static_cast<double>(d.size());
}

double mse(const Matrix& pred, const Matrix& truth) {
  check_same_shape(pred, truth);
  const Matrix d = (pred - truth).array().square();
  return kernels::compensated_sum(d.data(), d.size()) / static_cast<double>(d.size());
}

double mae(const FeatureTable& pred, const FeatureTable& truth) { return mae(pred.rows(), truth.rows()); }
double mse(const FeatureTable& pred, const FeatureTable& truth) { return mse(pred.rows(), truth.rows()); }

double pcc(const Matrix& pred, const Matrix& truth, PccMode mode) {
  check_same_shape(pred, truth);
  if (mode == PccMode::per_subject) {
    const Vector r = per_subject_pcc(pred, truth);
    return r.mean();
  }
  bool degenerate = false;
  const double r = correlation(pred.data(), truth.data(), pred.size(), degenerate);
  if (degenerate) warn("pcc: zero variance in predictions or truth; defined as 0");
  return r;
}

double pcc(const FeatureTable& pred, const FeatureTable& truth, PccMode mode) {
  return pcc(pred.rows(), truth.rows(), mode);
}

Vector per_subject_mae(const Matrix& pred, const Matrix& truth) {
  check_same_shape(pred, truth);
  return (pred - truth).cwiseAbs().rowwise().mean();
}

Vector per_subject_pcc(const Matrix& pred, const Matrix& truth) {
  check_same_shape(pred, truth);
  Vector out(pred.rows());
  Index degenerate_rows = 0;
  for (Index i = 0; i < pred.rows(); ++i) {
    const Vector a = pred.row(i).transpose();
    const Vector b = truth.row(i).transpose();
    bool degenerate = false;
    out(i) = correlation(a.data(), b.data(), a.size(), degenerate);
    degenerate_rows += degenerate ? 1 : 0;
  }
  if (degenerate_rows > 0) {
    warn("pcc: " + std::to_string(degenerate_rows) + " subject(s) with zero variance; defined as 0");
  }
  return out;
}

ConnectivityMatrix residual_matrix(const Vector& pred, const Vector& truth) {
  if (pred.size() != truth.size()) throw ShapeError("residual needs equal-length vectors");
  return devectorize((pred - truth).cwiseAbs(), rois_for_feature_count(pred.size()));
}

ScoreRecord score(const std::string& name, SplitKind split, const Matrix& pred, const Matrix& truth, Index fold) {
  ScoreRecord r;
  r.name = name;
  r.split = split;
  r.fold = fold;
  r.mae = mae(pred, truth);
  r.mse = mse(pred, truth);
  r.pcc = pcc(pred, truth);
  return r;
}

std::vector<Index> kfold_split(Index n, Index k, std::uint64_t seed) {
  if (k < 2) throw ParameterError("k-fold needs k >= 2");
  if (n < k) throw InsufficientDataError("k-fold needs at least k=" + std::to_string(k) + " samples, got " + std::to_string(n));
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  auto rng = make_rng(seed, 0);
  for (Index i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<Index> pick(0, i);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  std::vector<Index> fold(static_cast<std::size_t>(n));
  const Index base = n / k;
  const Index extra = n % k;
  Index pos = 0;
  for (Index f = 0; f < k; ++f) {
    const Index size = base + (f < extra ? 1 : 0);
    for (Index i = 0; i < size; ++i) fold[static_cast<std::size_t>(order[static_cast<std::size_t>(pos++)])] = f;
  }
  return fold;
}

CvResult cross_validate(const pipeline::PipelineConfig& config, const LongitudinalDataset& dataset, Index k,
                        std::uint64_t seed) {
  if (!dataset.labeled()) throw DataError("cross-validation needs a labeled dataset");
  const Index n = dataset.n_subjects();
  const auto fold = kfold_split(n, k, seed);
  const Matrix& truth = dataset.targets().rows();
  CvResult out;
  out.oof_predictions = Matrix::Zero(n, truth.cols());
  for (Index f = 0; f < k; ++f) {
    std::vector<Index> train;
    std::vector<Index> test;
    for (Index i = 0; i < n; ++i) (fold[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    const auto fitted = pipeline::fit_pipeline(config, dataset.select_rows(train));
    const Matrix pred = fitted.predict(take_rows(dataset.t0().rows(), test));
    for (std::size_t i = 0; i < test.size(); ++i) out.oof_predictions.row(test[i]) = pred.row(static_cast<Index>(i));
    out.folds.push_back(score(config.name, SplitKind::cv_fold, pred, take_rows(truth, test), f));
  }
  const auto stats = [&](auto member, double& mean, double& sd) {
    double s = 0.0;
    for (const auto& r : out.folds) s += r.*member;
    mean = s / static_cast<double>(k);
    double v = 0.0;
    for (const auto& r : out.folds) v += (r.*member - mean) * (r.*member - mean);
    sd = std::sqrt(v / static_cast<double>(k));
  };
  stats(&ScoreRecord::mae, out.mean_mae, out.std_mae);
  stats(&ScoreRecord::mse, out.mean_mse, out.std_mse);
  stats(&ScoreRecord::pcc, out.mean_pcc, out.std_pcc);
  out.oof_subject_mae = per_subject_mae(out.oof_predictions, truth);
  out.oof_subject_pcc = per_subject_pcc(out.oof_predictions, truth);
  return out;
}

}  // namespace connecto::eval
