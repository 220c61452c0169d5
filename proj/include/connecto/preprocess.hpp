#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "connecto/common.hpp"
#include "connecto/connectome.hpp"

namespace connecto::preprocess {

/// Per-subject keep flags produced by an outlier rule.
struct SampleMask {
  std::vector<bool> keep;

  Index size() const { return static_cast<Index>(keep.size()); }
  Index kept() const;
  std::vector<Index> kept_rows() const { return true_indices(keep); }
};

/// Per-feature keep flags fitted once and reapplied unchanged.
struct FeatureMask {
  std::vector<bool> keep;

  static FeatureMask all(Index d) { return {std::vector<bool>(static_cast<std::size_t>(d), true)}; }
  Index size() const { return static_cast<Index>(keep.size()); }
  Index kept() const;
  std::vector<Index> kept_columns() const { return true_indices(keep); }
  Matrix apply(const Matrix& x) const;
};

enum class ScalerMode { standard, maxabs };

struct ScalerParams {
  ScalerMode mode = ScalerMode::standard;
  Vector mean;   // zeros for maxabs
  Vector scale;  // 1 where the feature is degenerate
  std::vector<bool> degenerate;

  Matrix apply(const Matrix& x) const;
};

// ---- sample elimination -------------------------------------------------

/// Quantile with linear interpolation between order statistics.
double linear_quantile(std::vector<double> values, double q);

struct IqrBounds {
  Vector lower;
  Vector upper;
};
IqrBounds iqr_bounds(const Matrix& x, double multiplier = 1.5);

/// Drops a subject when more than violation_fraction of its features lie
/// outside [Q1 - m IQR, Q3 + m IQR]; 0 means "any feature". Bounds are closed.
SampleMask iqr_mask(const Matrix& x, double multiplier = 1.5, double violation_fraction = 0.0);
SampleMask iqr_mask(const FeatureTable& table, double multiplier = 1.5);

/// Drops a subject when a feature falls outside mean +/- k std (population).
SampleMask zscore_mask(const Matrix& x, double k = 3.0, double violation_fraction = 0.0);
SampleMask zscore_mask(const FeatureTable& table, double k = 3.0);

inline constexpr double kLofDefaultThreshold = 1.5;
inline constexpr double kIforestDefaultThreshold = 0.6;

/// Local outlier factor of every row against its k nearest neighbours.
Vector lof_scores(const Matrix& x, Index k_neighbors = 20);
Vector lof_scores(const FeatureTable& table, Index k_neighbors = 20);

struct IforestParams {
  Index n_trees = 100;
  Index subsample = 256;
  std::uint64_t seed = 0;
};

/// Isolation-forest anomaly score s(x) = 2^(-E[h(x)] / c(psi)).
Vector iforest_scores(const Matrix& x, const IforestParams& params);
Vector iforest_scores(const FeatureTable& table, const IforestParams& params);

/// Average unsuccessful-search path length c(n) of a binary search tree.
double average_path_length(Index n);

/// Keeps rows with score <= threshold.
SampleMask threshold_mask(const Vector& scores, double threshold);

/// One greedy leave-one-out pass: a subject is dropped when removing it
/// lowers the leave-one-out ridge error of the remaining set by more than
/// min_gain (relative).
SampleMask loo_search_mask(const Matrix& x, const Vector& y, double ridge_lambda = 1.0,
                           double min_gain = 0.01);

// ---- feature elimination ------------------------------------------------

FeatureMask drop_constant_features(const Matrix& x);
FeatureMask drop_redundant_features(const Matrix& x);
FeatureMask drop_correlated_features(const Matrix& x, double threshold = 0.95);

// ---- transforms ---------------------------------------------------------

ScalerParams fit_scaler(const Matrix& x, ScalerMode mode);
FeatureTable apply_scaler(const ScalerParams& params, const FeatureTable& table);

inline constexpr double kLogitEps = 1e-6;
Matrix logit_transform(const Matrix& x, double eps = kLogitEps);
Matrix sigmoid_transform(const Matrix& x);
FeatureTable logit_transform(const FeatureTable& table, double eps = kLogitEps);
FeatureTable sigmoid_transform(const FeatureTable& table);

/// Appends `copies` noisy replicas of every subject; targets are reused.
LongitudinalDataset augment_noise(const LongitudinalDataset& dataset, double sigma,
                                  Index copies, std::uint64_t seed);

}  // namespace connecto::preprocess
