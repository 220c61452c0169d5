#pragma once

// Regression trees and ensemble strategies: forests, bagging, AdaBoost.R2,
// gradient boosting and voting, plus the per-column lift of single-output
// learners to multi-output models.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "connecto/common.hpp"
#include "connecto/learners.hpp"

namespace connecto::ensemble {

using learners::MultiRegressorPtr;
using learners::Regressor;
using learners::RegressorPtr;

/// Fits a single-output learner; seed feeds any randomness the learner uses.
using Factory = std::function<RegressorPtr(const Matrix& x, const Vector& y, std::uint64_t seed)>;

enum class Splitter { best, random };

struct TreeParams {
  Index max_depth = -1;  // < 0: unlimited
  Index min_samples_leaf = 1;
  Splitter splitter = Splitter::best;
  double feature_fraction = 1.0;  // candidate features drawn per split
  double l2_leaf = 0.0;           // leaf value sum / (count + l2_leaf)
};

struct TreeNode {
  Index feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  Index left = -1;
  Index right = -1;
  double value = 0.0;

  template <class Archive>
  void serialize(Archive& ar) {
    ar(feature, threshold, left, right, value);
  }
};

/// Binary tree; a query goes left when x[feature] < threshold.
class RegressionTree : public Regressor {
 public:
  RegressionTree() = default;
  RegressionTree(std::vector<TreeNode> nodes, Index n_inputs);

  Vector predict(const Matrix& x) const override;
  double predict_row(const double* row) const;
  Index n_inputs() const override { return n_inputs_; }
  std::string kind() const override { return "tree"; }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  Index depth() const;
  Index leaf_count() const;
  /// Leaf reached by a query row.
  Index leaf_of(const double* row) const;

  template <class Archive>
  void serialize(Archive& ar) {
    ar(nodes_, n_inputs_);
  }

 private:
  std::vector<TreeNode> nodes_;
  Index n_inputs_ = 0;
};

RegressionTree fit_tree(const Matrix& x, const Vector& y, const TreeParams& params = {},
                        std::uint64_t seed = 0);

enum class Combiner { mean, weighted_mean, weighted_median, staged_sum };

class EnsembleModel : public Regressor {
 public:
  EnsembleModel() = default;
  /// Weights are normalised to sum to one. n_inputs is only needed for an
  /// empty staged ensemble.
  EnsembleModel(std::vector<RegressorPtr> members, Vector weights, Combiner combiner,
                double init = 0.0, double learning_rate = 1.0, Index n_inputs = -1);

  Vector predict(const Matrix& x) const override;
  Index n_inputs() const override { return n_inputs_; }
  std::string kind() const override { return "ensemble"; }

  /// Prediction using only the first m members.
  Vector predict_first(const Matrix& x, Index m) const;
  /// Member outputs, one column per member.
  Matrix member_predictions(const Matrix& x) const;

  const std::vector<RegressorPtr>& members() const { return members_; }
  const Vector& weights() const { return weights_; }
  Combiner combiner() const { return combiner_; }
  double init() const { return init_; }

  template <class Archive>
  void save(Archive& ar) const;
  template <class Archive>
  void load(Archive& ar);

 private:
  Vector combine(const Matrix& outputs, Index m) const;

  std::vector<RegressorPtr> members_;
  Vector weights_;
  Combiner combiner_ = Combiner::mean;
  double init_ = 0.0;
  double learning_rate_ = 1.0;
  Index n_inputs_ = 0;
};

/// Weighted median as used by AdaBoost.R2: the smallest value whose
/// cumulative weight reaches half the total.
double weighted_median(const std::vector<double>& values, const std::vector<double>& weights);

enum class SplitSource { bootstrap, kmeans };

struct ForestParams {
  Index n_trees = 100;
  TreeParams tree;
  bool bootstrap = true;
  SplitSource split_source = SplitSource::bootstrap;
  Index kmeans_k = -1;  // < 0: n_trees
  std::uint64_t seed = 0;
};

EnsembleModel fit_random_forest(const Matrix& x, const Vector& y, const ForestParams& params);

struct BaggingParams {
  Index n_estimators = 10;
  double sample_fraction = 1.0;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

EnsembleModel fit_bagging(const Matrix& x, const Vector& y, const Factory& base, const BaggingParams& params);

struct AdaBoostParams {
  Index n_estimators = 50;
  double learning_rate = 1.0;
  std::uint64_t seed = 0;
};

/// AdaBoost.R2 with the linear loss. The first round fits the full training
/// set; later rounds fit a bootstrap drawn with the current sample weights.
EnsembleModel fit_adaboost_r2(const Matrix& x, const Vector& y, const Factory& base,
                              const AdaBoostParams& params);

enum class BoostingVariant { classic, second_order };

struct BoostingParams {
  Index n_estimators = 100;
  double learning_rate = 0.1;
  Index max_depth = 3;
  Index min_samples_leaf = 1;
  BoostingVariant variant = BoostingVariant::classic;
  double l2_reg = 1.0;  // second_order only
  double subsample = 1.0;
  std::uint64_t seed = 0;
};

/// Squared-loss boosting from mean(y). The second-order variant uses leaf
/// values G / (H + l2_reg).
EnsembleModel fit_gradient_boosting(const Matrix& x, const Vector& y, const BoostingParams& params);

/// Fits every factory on the full data and averages (optionally weighted).
EnsembleModel fit_voting(const Matrix& x, const Vector& y, const std::vector<Factory>& members,
                         const std::vector<double>& weights, std::uint64_t seed);
Vector voting_predict(const std::vector<RegressorPtr>& members, const std::vector<double>& weights,
                      const Matrix& x);

// ---- multi-output ----------------------------------------------------------

/// One single-output model per output column.
class ColumnwiseModel : public learners::MultiRegressor {
 public:
  ColumnwiseModel() = default;
  ColumnwiseModel(std::vector<RegressorPtr> columns, Index n_inputs);

  Matrix predict(const Matrix& x) const override;
  Index n_inputs() const override { return n_inputs_; }
  Index n_outputs() const override { return static_cast<Index>(columns_.size()); }
  std::string kind() const override { return "columnwise"; }
  const std::vector<RegressorPtr>& columns() const { return columns_; }

  template <class Archive>
  void save(Archive& ar) const;
  template <class Archive>
  void load(Archive& ar);

 private:
  std::vector<RegressorPtr> columns_;
  Index n_inputs_ = 0;
};

/// Fits column j with seed derive_seed(seed, j); columns run in parallel.
ColumnwiseModel fit_columnwise(const Matrix& x, const Matrix& y, const Factory& factory,
                               std::uint64_t seed);

/// Weighted mean of multi-output members.
class VotingMulti : public learners::MultiRegressor {
 public:
  VotingMulti() = default;
  VotingMulti(std::vector<MultiRegressorPtr> members, Vector weights);

  Matrix predict(const Matrix& x) const override;
  Index n_inputs() const override { return members_.front()->n_inputs(); }
  Index n_outputs() const override { return members_.front()->n_outputs(); }
  std::string kind() const override { return "voting_multi"; }

  template <class Archive>
  void save(Archive& ar) const;
  template <class Archive>
  void load(Archive& ar);

 private:
  std::vector<MultiRegressorPtr> members_;
  Vector weights_;
};

}  // namespace connecto::ensemble
