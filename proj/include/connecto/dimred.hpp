#pragma once

// Feature extraction (PCA, truncated SVD) and feature selection. Every
// method is fitted once on training rows and then applied unchanged.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "connecto/common.hpp"
#include "connecto/preprocess.hpp"

namespace connecto::dimred {

enum class ProjectionKind { pca, tsvd };

struct Projection {
  ProjectionKind kind = ProjectionKind::pca;
  Matrix components;  // k x d, orthonormal rows
  Vector center;      // per-feature mean for pca, zeros for tsvd
  Vector explained_variance;
  Vector explained_variance_ratio;

  Index k() const { return components.rows(); }
  Index d() const { return components.cols(); }
  Matrix project(const Matrix& x) const;
  Matrix reconstruct(const Matrix& z) const;

  template <class Archive>
  void serialize(Archive& ar) {
    ar(kind, components, center, explained_variance, explained_variance_ratio);
  }
};

/// Top-k right singular vectors of the centred data. Each component's
/// largest-magnitude entry is positive.
Projection fit_pca(const Matrix& x, Index k);
/// Same without centring.
Projection fit_tsvd(const Matrix& x, Index k);

struct SelectionReport {
  Vector scores;
  preprocess::FeatureMask selected;
  std::string method;
};

struct VarianceThresholdParams {
  std::optional<double> threshold;
  std::optional<Index> drop_lowest;
};

/// Keeps variance > threshold, or drops the drop_lowest lowest-variance
/// features (lower index first on ties). Neither given means threshold 0.
SelectionReport variance_threshold(const Matrix& x, const VarianceThresholdParams& params);

/// Plug-in mutual information (nats) between two variables after
/// equal-frequency binning. Tied values share a bin.
double binned_mutual_information(const Vector& a, const Vector& b, Index bins);
std::vector<Index> equal_frequency_bins(const Vector& v, Index bins);

/// Top-k features by mutual information with y; ties keep the lower index.
SelectionReport select_k_best_mi(const Matrix& x, const Vector& y, Index k, Index bins = 10);

/// Fits on (x_train, y_train) and returns predictions for x_test.
using FitPredict = std::function<Vector(const Matrix&, const Vector&, const Matrix&)>;

struct UnivariateCandidates {
  std::vector<Index> k_values;
  std::vector<double> percentiles;  // in (0, 100]
};

/// Features kept by a percentile candidate over d features.
Index percentile_count(Index d, double percentile);

/// Picks the candidate with the lowest cross-validated MAE of `learner` on
/// the selected features (earlier candidates win ties; k values precede
/// percentiles) and returns that candidate's selection on the full data.
SelectionReport generic_univariate_select(const Matrix& x, const Vector& y,
                                          const UnivariateCandidates& candidates, Index cv_folds,
                                          const FitPredict& learner, std::uint64_t seed,
                                          Index bins = 10);

struct BackwardEliminationParams {
  double p_threshold = 0.05;
  Index max_rounds = -1;  // < 0: no limit
};

/// Repeated OLS fits dropping the feature with the largest p-value above
/// the threshold. Scores hold each feature's last p-value.
SelectionReport backward_elimination(const Matrix& x, const Vector& y,
                                     const BackwardEliminationParams& params = {});

}  // namespace connecto::dimred
