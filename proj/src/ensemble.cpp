#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "connecto/ensemble.hpp"
#include "connecto/kernels.hpp"

namespace connecto::ensemble {

namespace {

// Weighted mean that is exact for identical inputs, independent of member
// order, and never leaves [min, max].
double stable_mean(std::vector<std::pair<double, double>>& vw) {
  std::sort(vw.begin(), vw.end());
  const double anchor = vw.front().first;
  double acc = 0.0;
  double wsum = 0.0;
  for (const auto& [v, w] : vw) {
    acc += w * (v - anchor);
    wsum += w;
  }
  return std::clamp(anchor + acc / wsum, vw.front().first, vw.back().first);
}

std::vector<Index> sorted_sample(Index n, Index m, bool replace, Rng& rng) {
  std::vector<Index> rows;
  rows.reserve(static_cast<std::size_t>(m));
  if (replace) {
    std::uniform_int_distribution<Index> pick(0, n - 1);
    for (Index i = 0; i < m; ++i) rows.push_back(pick(rng));
  } else {
    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    for (Index i = 0; i < m; ++i) {
      std::uniform_int_distribution<Index> pick(i, n - 1);
      std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(pick(rng))]);
    }
    rows.assign(all.begin(), all.begin() + m);
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

void check_xy(const Matrix& x, const Vector& y) {
  if (x.rows() == 0) throw DataError("cannot fit on an empty table");
  if (x.rows() != y.size()) throw ShapeError("inputs and targets disagree on row count");
}

}  // namespace

double weighted_median(const std::vector<double>& values, const std::vector<double>& weights) {
  if (values.empty() || values.size() != weights.size()) throw ShapeError("weighted median needs matching inputs");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double run = 0.0;
  for (std::size_t k : order) {
    run += weights[k];
    if (run >= 0.5 * total) return values[k];
  }
  return values[order.back()];
}

EnsembleModel::EnsembleModel(std::vector<RegressorPtr> members, Vector weights, Combiner combiner,
                             double init, double learning_rate, Index n_inputs)
    : members_(std::move(members)),
      weights_(std::move(weights)),
      combiner_(combiner),
      init_(init),
      learning_rate_(learning_rate),
      n_inputs_(n_inputs) {
  if (members_.empty() && combiner_ != Combiner::staged_sum) throw ShapeError("an ensemble needs members");
  if (!members_.empty()) n_inputs_ = members_.front()->n_inputs();
  for (const auto& m : members_) {
    if (m->n_inputs() != n_inputs_) throw ShapeError("ensemble members disagree on input width");
  }
  const auto m = static_cast<Index>(members_.size());
  if (weights_.size() == 0) weights_ = Vector::Ones(m);
  if (weights_.size() != m) throw ShapeError("one weight per member required");
  if ((weights_.array() < 0.0).any() || !weights_.allFinite()) throw ParameterError("member weights must be finite and >= 0");
  if (m > 0 && combiner_ != Combiner::staged_sum) {
    const double s = weights_.sum();
    if (!(s > 0.0)) throw ParameterError("member weights must not all be zero");
    weights_ /= s;
  }
}

Matrix EnsembleModel::member_predictions(const Matrix& x) const {
  Matrix out(x.rows(), static_cast<Index>(members_.size()));
  for (std::size_t i = 0; i < members_.size(); ++i) out.col(static_cast<Index>(i)) = members_[i]->predict(x);
  return out;
}

Vector EnsembleModel::combine(const Matrix& outputs, Index m) const {
  const Index n = outputs.rows();
  Vector out(n);
  if (combiner_ == Combiner::staged_sum) {
    out.setConstant(init_);
    for (Index k = 0; k < m; ++k) out += learning_rate_ * outputs.col(k);
    return out;
  }
  if (m < 1) throw ParameterError("need at least one member to combine");
  std::vector<std::pair<double, double>> vw(static_cast<std::size_t>(m));
  std::vector<double> v(static_cast<std::size_t>(m));
  std::vector<double> w(static_cast<std::size_t>(m));
  for (Index i = 0; i < n; ++i) {
    if (combiner_ == Combiner::weighted_median) {
      for (Index k = 0; k < m; ++k) {
        v[static_cast<std::size_t>(k)] = outputs(i, k);
        w[static_cast<std::size_t>(k)] = weights_(k);
      }
      out(i) = weighted_median(v, w);
      continue;
    }
    for (Index k = 0; k < m; ++k) {
      const double wk = combiner_ == Combiner::mean ? 1.0 : weights_(k);
      vw[static_cast<std::size_t>(k)] = {outputs(i, k), wk};
    }
    out(i) = stable_mean(vw);
  }
  return out;
}

Vector EnsembleModel::predict(const Matrix& x) const {
  if (x.cols() != n_inputs_) throw ShapeError("ensemble input width mismatch");
  return combine(member_predictions(x), static_cast<Index>(members_.size()));
}

Vector EnsembleModel::predict_first(const Matrix& x, Index m) const {
  if (m < 0 || m > static_cast<Index>(members_.size())) throw ParameterError("member count out of range");
  if (x.cols() != n_inputs_) throw ShapeError("ensemble input width mismatch");
  Matrix out(x.rows(), m);
  for (Index k = 0; k < m; ++k) out.col(k) = members_[static_cast<std::size_t>(k)]->predict(x);
  return combine(out, m);
}

EnsembleModel fit_random_forest(const Matrix& x, const Vector& y, const ForestParams& p) {
  check_xy(x, y);
  if (p.n_trees < 1) throw ParameterError("n_trees must be >= 1");
  const Index n = x.rows();
  std::vector<std::vector<Index>> subsets;
  if (p.split_source == SplitSource::kmeans) {
    const Index k = std::min(p.kmeans_k < 0 ? p.n_trees : p.kmeans_k, n);
    if (k < 1) throw ParameterError("kmeans_k must be >= 1");
    const auto km = learners::kmeans(x, k, p.seed);
    std::vector<std::vector<Index>> clusters(static_cast<std::size_t>(k));
    for (Index i = 0; i < n; ++i) clusters[static_cast<std::size_t>(km.labels[static_cast<std::size_t>(i)])].push_back(i);
    // Small clusters fold into the nearest surviving centroid.
    const auto min_rows = static_cast<std::size_t>(std::max<Index>(1, p.tree.min_samples_leaf));
    std::vector<bool> alive(static_cast<std::size_t>(k));
    for (Index c = 0; c < k; ++c) alive[static_cast<std::size_t>(c)] = clusters[static_cast<std::size_t>(c)].size() >= min_rows;
    if (std::none_of(alive.begin(), alive.end(), [](bool b) { return b; })) {
      std::vector<Index> all(static_cast<std::size_t>(n));
      std::iota(all.begin(), all.end(), Index{0});
      subsets.push_back(all);
    } else {
      for (Index c = 0; c < k; ++c) {
        if (alive[static_cast<std::size_t>(c)]) continue;
        Index target = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Index o = 0; o < k; ++o) {
          if (!alive[static_cast<std::size_t>(o)]) continue;
          const double dist = (km.centroids.row(c) - km.centroids.row(o)).squaredNorm();
          if (dist < best) {
            best = dist;
            target = o;
          }
        }
        auto& dst = clusters[static_cast<std::size_t>(target)];
        dst.insert(dst.end(), clusters[static_cast<std::size_t>(c)].begin(), clusters[static_cast<std::size_t>(c)].end());
        std::sort(dst.begin(), dst.end());
      }
      for (Index c = 0; c < k; ++c) {
        if (alive[static_cast<std::size_t>(c)]) subsets.push_back(clusters[static_cast<std::size_t>(c)]);
      }
    }
  }
  const Index n_trees = p.split_source == SplitSource::kmeans ? static_cast<Index>(subsets.size()) : p.n_trees;
  std::vector<RegressorPtr> trees(static_cast<std::size_t>(n_trees));
  kernels::parallel_for(n_trees, [&](Index t) {
    const std::uint64_t s = derive_seed(p.seed, static_cast<std::uint64_t>(t));
    std::vector<Index> rows;
    if (p.split_source == SplitSource::kmeans) {
      rows = subsets[static_cast<std::size_t>(t)];
    } else if (p.bootstrap) {
      Rng rng = make_rng(s, 0);
      rows = sorted_sample(n, n, true, rng);
    }
    if (rows.empty()) {
      trees[static_cast<std::size_t>(t)] = std::make_shared<RegressionTree>(fit_tree(x, y, p.tree, derive_seed(s, 1)));
    } else {
      trees[static_cast<std::size_t>(t)] =
          std::make_shared<RegressionTree>(fit_tree(take_rows(x, rows), take_rows(y, rows), p.tree, derive_seed(s, 1)));
    }
  });
  return EnsembleModel(std::move(trees), Vector(), Combiner::mean);
}

EnsembleModel fit_bagging(const Matrix& x, const Vector& y, const Factory& base, const BaggingParams& p) {
  check_xy(x, y);
  if (p.n_estimators < 1) throw ParameterError("n_estimators must be >= 1");
  if (!(p.sample_fraction > 0.0 && p.sample_fraction <= 1.0)) throw ParameterError("sample_fraction must lie in (0, 1]");
  const Index n = x.rows();
  const Index m = std::max<Index>(1, static_cast<Index>(std::llround(p.sample_fraction * static_cast<double>(n))));
  std::vector<RegressorPtr> members(static_cast<std::size_t>(p.n_estimators));
  kernels::parallel_for(p.n_estimators, [&](Index e) {
    const std::uint64_t s = derive_seed(p.seed, static_cast<std::uint64_t>(e));
    Rng rng = make_rng(s, 0);
    const auto rows = sorted_sample(n, m, p.bootstrap, rng);
    members[static_cast<std::size_t>(e)] = base(take_rows(x, rows), take_rows(y, rows), derive_seed(s, 1));
  });
  return EnsembleModel(std::move(members), Vector(), Combiner::mean);
}

EnsembleModel fit_adaboost_r2(const Matrix& x, const Vector& y, const Factory& base, const AdaBoostParams& p) {
  check_xy(x, y);
  if (p.n_estimators < 1) throw ParameterError("n_estimators must be >= 1");
  if (!(p.learning_rate > 0.0)) throw ParameterError("learning_rate must be > 0");
  const Index n = x.rows();
  Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));
  std::vector<RegressorPtr> members;
  std::vector<double> member_w;
  for (Index round = 0; round < p.n_estimators; ++round) {
    const std::uint64_t s = derive_seed(p.seed, static_cast<std::uint64_t>(round));
    RegressorPtr model;
    if (round == 0) {
      model = base(x, y, derive_seed(s, 1));
    } else {
      Rng rng = make_rng(s, 0);
      std::vector<double> cum(static_cast<std::size_t>(n));
      std::partial_sum(w.data(), w.data() + n, cum.begin());
      std::uniform_real_distribution<double> u(0.0, cum.back());
      std::vector<Index> rows(static_cast<std::size_t>(n));
      for (auto& r : rows) {
        const auto it = std::upper_bound(cum.begin(), cum.end(), u(rng));
        r = std::min<Index>(static_cast<Index>(it - cum.begin()), n - 1);
      }
      std::sort(rows.begin(), rows.end());
      model = base(take_rows(x, rows), take_rows(y, rows), derive_seed(s, 1));
    }
    Vector err = (model->predict(x) - y).cwiseAbs();
    const double emax = err.maxCoeff();
    if (emax > 0.0) err /= emax;
    const double avg = w.dot(err);
    if (avg <= 0.0) {
      members.push_back(model);
      member_w.push_back(1.0);
      break;
    }
    if (avg >= 0.5) {
      if (members.empty()) {
        members.push_back(model);
        member_w.push_back(1.0);
      }
      break;
    }
    const double beta = avg / (1.0 - avg);
    members.push_back(model);
    member_w.push_back(p.learning_rate * std::log(1.0 / beta));
    for (Index i = 0; i < n; ++i) w(i) *= std::pow(beta, (1.0 - err(i)) * p.learning_rate);
    w /= w.sum();
  }
  return EnsembleModel(std::move(members), Eigen::Map<const Vector>(member_w.data(), static_cast<Index>(member_w.size())),
                       Combiner::weighted_median);
}

EnsembleModel fit_gradient_boosting(const Matrix& x, const Vector& y, const BoostingParams& p) {
  check_xy(x, y);
  if (p.n_estimators < 0) throw ParameterError("n_estimators must be >= 0");
  if (!(p.learning_rate > 0.0)) throw ParameterError("learning_rate must be > 0");
  if (!(p.subsample > 0.0 && p.subsample <= 1.0)) throw ParameterError("subsample must lie in (0, 1]");
  if (p.variant == BoostingVariant::second_order && !(p.l2_reg >= 0.0)) throw ParameterError("l2_reg must be >= 0");
  const Index n = x.rows();
  const double init = y.mean();
  TreeParams tp;
  tp.max_depth = p.max_depth;
  tp.min_samples_leaf = p.min_samples_leaf;
  tp.l2_leaf = p.variant == BoostingVariant::second_order ? p.l2_reg : 0.0;
  const Index m = std::max<Index>(1, static_cast<Index>(std::llround(p.subsample * static_cast<double>(n))));

  Vector f = Vector::Constant(n, init);
  std::vector<RegressorPtr> trees;
  for (Index stage = 0; stage < p.n_estimators; ++stage) {
    const std::uint64_t s = derive_seed(p.seed, static_cast<std::uint64_t>(stage));
    const Vector r = y - f;
    std::shared_ptr<RegressionTree> tree;
    if (m < n) {
      Rng rng = make_rng(s, 0);
      const auto rows = sorted_sample(n, m, false, rng);
      tree = std::make_shared<RegressionTree>(fit_tree(take_rows(x, rows), take_rows(r, rows), tp, derive_seed(s, 1)));
    } else {
      tree = std::make_shared<RegressionTree>(fit_tree(x, r, tp, derive_seed(s, 1)));
    }
    f += p.learning_rate * tree->predict(x);
    trees.push_back(std::move(tree));
  }
  return EnsembleModel(std::move(trees), Vector(), Combiner::staged_sum, init, p.learning_rate, x.cols());
}

EnsembleModel fit_voting(const Matrix& x, const Vector& y, const std::vector<Factory>& factories,
                         const std::vector<double>& weights, std::uint64_t seed) {
  check_xy(x, y);
  if (factories.empty()) throw ParameterError("voting needs at least one member");
  if (!weights.empty() && weights.size() != factories.size()) throw ParameterError("one voting weight per member");
  std::vector<RegressorPtr> members(factories.size());
  kernels::parallel_for(static_cast<Index>(factories.size()), [&](Index i) {
    members[static_cast<std::size_t>(i)] = factories[static_cast<std::size_t>(i)](x, y, derive_seed(seed, static_cast<std::uint64_t>(i)));
  });
  if (weights.empty()) return EnsembleModel(std::move(members), Vector(), Combiner::mean);
  return EnsembleModel(std::move(members), Eigen::Map<const Vector>(weights.data(), static_cast<Index>(weights.size())),
                       Combiner::weighted_mean);
}

Vector voting_predict(const std::vector<RegressorPtr>& members, const std::vector<double>& weights, const Matrix& x) {
  Vector w = weights.empty() ? Vector(Vector::Ones(static_cast<Index>(members.size())))
                             : Vector(Eigen::Map<const Vector>(weights.data(), static_cast<Index>(weights.size())));
  const EnsembleModel model(members, w, weights.empty() ? Combiner::mean : Combiner::weighted_mean);
  return model.predict(x);
}

ColumnwiseModel::ColumnwiseModel(std::vector<RegressorPtr> columns, Index n_inputs)
    : columns_(std::move(columns)), n_inputs_(n_inputs) {
  for (const auto& c : columns_) {
    if (c->n_inputs() != n_inputs_) throw ShapeError("column models disagree on input width");
  }
}

Matrix ColumnwiseModel::predict(const Matrix& x) const {
  if (x.cols() != n_inputs_) throw ShapeError("column model input width mismatch");
  Matrix out(x.rows(), n_outputs());
  kernels::parallel_for(n_outputs(), [&](Index j) { out.col(j) = columns_[static_cast<std::size_t>(j)]->predict(x); });
  return out;
}

ColumnwiseModel fit_columnwise(const Matrix& x, const Matrix& y, const Factory& factory, std::uint64_t seed) {
  if (x.rows() != y.rows()) throw ShapeError("inputs and targets disagree on row count");
  std::vector<RegressorPtr> cols(static_cast<std::size_t>(y.cols()));
  kernels::parallel_for(y.cols(), [&](Index j) {
    cols[static_cast<std::size_t>(j)] = factory(x, y.col(j), derive_seed(seed, static_cast<std::uint64_t>(j)));
  });
  return ColumnwiseModel(std::move(cols), x.cols());
}

VotingMulti::VotingMulti(std::vector<MultiRegressorPtr> members, Vector weights)
    : members_(std::move(members)), weights_(std::move(weights)) {
  if (members_.empty()) throw ShapeError("voting needs members");
  if (weights_.size() == 0) weights_ = Vector::Ones(static_cast<Index>(members_.size()));
  if (weights_.size() != static_cast<Index>(members_.size())) throw ShapeError("one weight per member required");
  if ((weights_.array() < 0.0).any() || !(weights_.sum() > 0.0)) throw ParameterError("invalid voting weights");
  weights_ /= weights_.sum();
  for (const auto& m : members_) {
    if (m->n_inputs() != members_.front()->n_inputs() || m->n_outputs() != members_.front()->n_outputs()) {
      throw ShapeError("voting members disagree on shape");
    }
  }
}

Matrix VotingMulti::predict(const Matrix& x) const {
  Matrix out = weights_(0) * members_.front()->predict(x);
  for (std::size_t i = 1; i < members_.size(); ++i) out += weights_(static_cast<Index>(i)) * members_[i]->predict(x);
  return out;
}

}  // namespace connecto::ensemble
