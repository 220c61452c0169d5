#include "connecto/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "connecto/kernels.hpp"
#include "connecto/preprocess.hpp"
#include "stages.hpp"

namespace connecto::pipeline {

using learners::MultiRegressorPtr;
using learners::RegressorPtr;

const std::vector<std::string>& preprocess_stage_names() {
  static const std::vector<std::string> names = {"iqr",           "zscore",         "lof",
                                                 "iforest",       "loo_search",     "drop_constant",
                                                 "drop_redundant", "drop_correlated", "scaler",
                                                 "logit",         "noise"};
  return names;
}

const std::vector<std::string>& dimred_stage_names() {
  static const std::vector<std::string> names = {"pca",           "tsvd",               "variance_threshold",
                                                 "select_k_best", "generic_univariate", "backward_elimination"};
  return names;
}

const std::vector<std::string>& learner_type_names() {
  static const std::vector<std::string> names = {
      "ols",  "ridge", "lasso",         "elastic_net",  "omp",     "bayesian_ridge", "huber",
      "svr",  "knn",   "pls",           "tree",         "random_forest", "extra_trees", "bagging",
      "adaboost", "gradient_boosting", "voting"};
  return names;
}


MatchedModel::MatchedModel(std::vector<Index> input_of_target, std::vector<RegressorPtr> models, Index n_inputs)
    : input_of_target_(std::move(input_of_target)), models_(std::move(models)), n_inputs_(n_inputs) {
  if (input_of_target_.size() != models_.size()) throw ShapeError("one input index per target model");
}

Matrix MatchedModel::predict(const Matrix& x) const {
  if (x.cols() != n_inputs_) throw ShapeError("matched model input width mismatch");
  Matrix out(x.rows(), n_outputs());
  kernels::parallel_for(n_outputs(), [&](Index j) {
    const Index c = input_of_target_[static_cast<std::size_t>(j)];
    const Matrix col = c >= 0 ? Matrix(x.col(c)) : Matrix(x.rows(), 0);
    out.col(j) = models_[static_cast<std::size_t>(j)]->predict(col);
  });
  return out;
}

// ---- learner specs ---------------------------------------------------------

namespace {

using detail::LogitStage;
using detail::MaskStage;
using detail::ProjectionStage;
using detail::ScalerStage;

std::vector<double> parse_list(const std::string& s, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    Params p;
    p.set(key, item.substr(item.find_first_not_of(' ') == std::string::npos ? 0 : item.find_first_not_of(' ')));
    out.push_back(p.get_double(key, 0.0));
  }
  return out;
}

ensemble::TreeParams tree_params(const Params& p, ensemble::Splitter default_splitter) {
  ensemble::TreeParams t;
  t.max_depth = p.get_int("max_depth", -1);
  t.min_samples_leaf = p.get_int("min_samples_leaf", 1);
  t.feature_fraction = p.get_double("feature_fraction", 1.0);
  const std::string s = p.get_string("splitter", default_splitter == ensemble::Splitter::best ? "best" : "random");
  if (s == "best") {
    t.splitter = ensemble::Splitter::best;
  } else if (s == "random") {
    t.splitter = ensemble::Splitter::random;
  } else {
    throw ParameterError("splitter must be best or random");
  }
  if (t.min_samples_leaf < 1) throw ParameterError("min_samples_leaf must be >= 1");
  if (!(t.feature_fraction > 0.0 && t.feature_fraction <= 1.0)) throw ParameterError("feature_fraction must lie in (0, 1]");
  return t;
}

learners::SvrParams svr_params(const Params& p) {
  p.require_known({"c", "epsilon", "kernel", "gamma", "tol"}, "svr");
  learners::SvrParams s;
  s.c = p.get_double("c", 1.0);
  s.epsilon = p.get_double("epsilon", 0.1);
  s.tol = p.get_double("tol", 1e-3);
  s.kernel.gamma = p.get_double("gamma", -1.0);
  const std::string k = p.get_string("kernel", "rbf");
  if (k == "rbf") {
    s.kernel.type = learners::KernelType::rbf;
  } else if (k == "linear") {
    s.kernel.type = learners::KernelType::linear;
  } else {
    throw ParameterError("svr kernel must be rbf or linear");
  }
  if (!(s.c > 0.0)) throw ParameterError("svr c must be > 0");
  if (!(s.epsilon >= 0.0)) throw ParameterError("svr epsilon must be >= 0");
  return s;
}

ensemble::Factory make_factory(const LearnerSpec& spec);

ensemble::Factory base_or(const LearnerSpec& spec, LearnerSpec fallback) {
  if (spec.base.size() > 1) throw ParameterError(spec.type + ": at most one base learner");
  return make_factory(spec.base.empty() ? fallback : spec.base.front());
}

std::shared_ptr<learners::LinearModel> linear(learners::LinearModel m) {
  return std::make_shared<learners::LinearModel>(std::move(m));
}

ensemble::Factory make_factory(const LearnerSpec& spec) {
  const Params& p = spec.params;
  const std::string& t = spec.type;
  if (t != "voting" && !spec.members.empty()) throw ParameterError(t + ": only voting takes members");
  if (t != "bagging" && t != "adaboost" && !spec.base.empty()) throw ParameterError(t + ": does not take a base learner");

  if (t == "ols") {
    p.require_known({}, t);
    return [](const Matrix& x, const Vector& y, std::uint64_t) { return linear(learners::fit_ols(x, y)); };
  }
  if (t == "ridge") {
    p.require_known({"lambda"}, t);
    const double lambda = p.get_double("lambda", 1.0);
    if (!(lambda >= 0.0)) throw ParameterError("ridge lambda must be >= 0");
    return [lambda](const Matrix& x, const Vector& y, std::uint64_t) { return linear(learners::fit_ridge(x, y, lambda)); };
  }
  if (t == "lasso" || t == "elastic_net") {
    p.require_known({"alpha", "l1_ratio", "tol", "max_iter"}, t);
    learners::ElasticNetParams e;
    e.alpha = p.get_double("alpha", 1.0);
    e.l1_ratio = t == "lasso" ? 1.0 : p.get_double("l1_ratio", 0.5);
    if (t == "lasso" && p.has("l1_ratio")) throw ParameterError("lasso fixes l1_ratio = 1");
    e.tol = p.get_double("tol", 1e-6);
    e.max_iter = p.get_int("max_iter", 10000);
    if (!(e.alpha > 0.0)) throw ParameterError(t + " alpha must be > 0");
    if (!(e.l1_ratio >= 0.0 && e.l1_ratio <= 1.0)) throw ParameterError("l1_ratio must lie in [0, 1]");
    return [e](const Matrix& x, const Vector& y, std::uint64_t) { return linear(learners::fit_elastic_net(x, y, e).model); };
  }
  if (t == "omp") {
    p.require_known({"n_nonzero"}, t);
    const Index k = p.get_int("n_nonzero", -1);
    if (k == 0 || k < -1) throw ParameterError("omp n_nonzero must be >= 1 (or -1 for d/10)");
    return [k](const Matrix& x, const Vector& y, std::uint64_t) {
      const Index d = x.cols();
      const Index kk = k < 0 ? std::max<Index>(1, (d + 9) / 10) : std::min(k, std::max<Index>(d, 1));
      if (d == 0) return linear(learners::fit_ols(x, y));
      return linear(learners::fit_omp(x, y, kk));
    };
  }
  if (t == "bayesian_ridge") {
    p.require_known({"max_iter", "tol"}, t);
    learners::BayesianRidgeParams b;
    b.max_iter = p.get_int("max_iter", 300);
    b.tol = p.get_double("tol", 1e-4);
    if (b.max_iter < 1 || !(b.tol > 0.0)) throw ParameterError("bayesian_ridge max_iter/tol invalid");
    return [b](const Matrix& x, const Vector& y, std::uint64_t) -> RegressorPtr {
      return std::make_shared<learners::BayesianLinearModel>(learners::fit_bayesian_ridge(x, y, b));
    };
  }
  if (t == "huber") {
    p.require_known({"epsilon", "lambda", "tol", "max_iter"}, t);
    learners::HuberParams h;
    h.epsilon = p.get_double("epsilon", 1.35);
    h.lambda = p.get_double("lambda", 1e-4);
    h.tol = p.get_double("tol", 1e-6);
    h.max_iter = p.get_int("max_iter", 500);
    if (!(h.epsilon > 1.0) || !(h.lambda >= 0.0)) throw ParameterError("huber epsilon must be > 1 and lambda >= 0");
    return [h](const Matrix& x, const Vector& y, std::uint64_t) { return linear(learners::fit_huber(x, y, h).model); };
  }
  if (t == "svr") {
    const auto s = svr_params(p);
    return [s](const Matrix& x, const Vector& y, std::uint64_t) -> RegressorPtr {
      return std::make_shared<learners::KernelModel>(learners::fit_svr(x, y, s));
    };
  }
  if (t == "knn") {
    p.require_known({"k", "weighting"}, t);
    const Index k = p.get_int("k", 5);
    const std::string w = p.get_string("weighting", "uniform");
    if (k < 1) throw ParameterError("knn k must be >= 1");
    if (w != "uniform" && w != "distance") throw ParameterError("knn weighting must be uniform or distance");
    const auto weighting = w == "uniform" ? learners::NeighborWeighting::uniform : learners::NeighborWeighting::distance;
    return [k, weighting](const Matrix& x, const Vector& y, std::uint64_t) -> RegressorPtr {
      return std::make_shared<learners::NeighborRegressor>(learners::fit_knn(x, Matrix(y), k, weighting));
    };
  }
  if (t == "pls") {
    p.require_known({"n_components"}, t);
    const Index k = p.get_int("n_components", 2);
    if (k < 1) throw ParameterError("pls n_components must be >= 1");
    return [k](const Matrix& x, const Vector& y, std::uint64_t) {
      return linear(learners::fit_pls1(x, y, std::min({k, x.cols(), x.rows()})));
    };
  }
  if (t == "tree") {
    p.require_known({"max_depth", "min_samples_leaf", "feature_fraction", "splitter"}, t);
    const auto tp = tree_params(p, ensemble::Splitter::best);
    return [tp](const Matrix& x, const Vector& y, std::uint64_t seed) -> RegressorPtr {
      return std::make_shared<ensemble::RegressionTree>(ensemble::fit_tree(x, y, tp, seed));
    };
  }
  if (t == "random_forest" || t == "extra_trees") {
    p.require_known({"n_trees", "max_depth", "min_samples_leaf", "feature_fraction", "splitter", "bootstrap",
                     "split_source", "kmeans_k"},
                    t);
    const bool extra = t == "extra_trees";
    ensemble::ForestParams f;
    f.n_trees = p.get_int("n_trees", 100);
    f.tree = tree_params(p, extra ? ensemble::Splitter::random : ensemble::Splitter::best);
    f.bootstrap = p.get_bool("bootstrap", !extra);
    const std::string src = p.get_string("split_source", "bootstrap");
    if (src == "bootstrap") {
      f.split_source = ensemble::SplitSource::bootstrap;
    } else if (src == "kmeans") {
      f.split_source = ensemble::SplitSource::kmeans;
    } else {
      throw ParameterError("split_source must be bootstrap or kmeans");
    }
    f.kmeans_k = p.get_int("kmeans_k", -1);
    if (f.n_trees < 1) throw ParameterError("n_trees must be >= 1");
    return [f](const Matrix& x, const Vector& y, std::uint64_t seed) -> RegressorPtr {
      auto fp = f;
      fp.seed = seed;
      return std::make_shared<ensemble::EnsembleModel>(ensemble::fit_random_forest(x, y, fp));
    };
  }
  if (t == "bagging") {
    p.require_known({"n_estimators", "sample_fraction", "bootstrap"}, t);
    ensemble::BaggingParams b;
    b.n_estimators = p.get_int("n_estimators", 10);
    b.sample_fraction = p.get_double("sample_fraction", 1.0);
    b.bootstrap = p.get_bool("bootstrap", true);
    if (b.n_estimators < 1) throw ParameterError("n_estimators must be >= 1");
    if (!(b.sample_fraction > 0.0 && b.sample_fraction <= 1.0)) throw ParameterError("sample_fraction must lie in (0, 1]");
    LearnerSpec fallback;
    fallback.type = "tree";
    auto base = base_or(spec, fallback);
    return [b, base](const Matrix& x, const Vector& y, std::uint64_t seed) -> RegressorPtr {
      auto bp = b;
      bp.seed = seed;
      return std::make_shared<ensemble::EnsembleModel>(ensemble::fit_bagging(x, y, base, bp));
    };
  }
  if (t == "adaboost") {
    p.require_known({"n_estimators", "learning_rate"}, t);
    ensemble::AdaBoostParams a;
    a.n_estimators = p.get_int("n_estimators", 50);
    a.learning_rate = p.get_double("learning_rate", 1.0);
    if (a.n_estimators < 1 || !(a.learning_rate > 0.0)) throw ParameterError("adaboost n_estimators/learning_rate invalid");
    LearnerSpec fallback;
    fallback.type = "tree";
    fallback.params.set("max_depth", "3");
    auto base = base_or(spec, fallback);
    return [a, base](const Matrix& x, const Vector& y, std::uint64_t seed) -> RegressorPtr {
      auto ap = a;
      ap.seed = seed;
      return std::make_shared<ensemble::EnsembleModel>(ensemble::fit_adaboost_r2(x, y, base, ap));
    };
  }
  if (t == "gradient_boosting") {
    p.require_known({"n_estimators", "learning_rate", "max_depth", "min_samples_leaf", "variant", "l2_reg", "subsample"}, t);
    ensemble::BoostingParams g;
    g.n_estimators = p.get_int("n_estimators", 100);
    g.learning_rate = p.get_double("learning_rate", 0.1);
    g.max_depth = p.get_int("max_depth", 3);
    g.min_samples_leaf = p.get_int("min_samples_leaf", 1);
    g.l2_reg = p.get_double("l2_reg", 1.0);
    g.subsample = p.get_double("subsample", 1.0);
    const std::string v = p.get_string("variant", "classic");
    if (v == "classic") {
      g.variant = ensemble::BoostingVariant::classic;
    } else if (v == "second_order") {
      g.variant = ensemble::BoostingVariant::second_order;
    } else {
      throw ParameterError("variant must be classic or second_order");
    }
    if (g.n_estimators < 0 || !(g.learning_rate > 0.0) || !(g.subsample > 0.0 && g.subsample <= 1.0) ||
        !(g.l2_reg >= 0.0) || g.min_samples_leaf < 1) {
      throw ParameterError("gradient_boosting parameters out of range");
    }
    return [g](const Matrix& x, const Vector& y, std::uint64_t seed) -> RegressorPtr {
      auto gp = g;
      gp.seed = seed;
      return std::make_shared<ensemble::EnsembleModel>(ensemble::fit_gradient_boosting(x, y, gp));
    };
  }
  if (t == "voting") {
    p.require_known({"weights"}, t);
    if (spec.members.empty()) throw ParameterError("voting needs at least one member");
    std::vector<double> w = p.has("weights") ? parse_list(p.get_string("weights", ""), "weights") : std::vector<double>{};
    if (!w.empty() && w.size() != spec.members.size()) throw ParameterError("voting needs one weight per member");
    std::vector<ensemble::Factory> members;
    for (const auto& m : spec.members) members.push_back(make_factory(m));
    return [members, w](const Matrix& x, const Vector& y, std::uint64_t seed) -> RegressorPtr {
      return std::make_shared<ensemble::EnsembleModel>(ensemble::fit_voting(x, y, members, w, seed));
    };
  }
  throw ParameterError("unknown learner type '" + t + "'");
}

// Multi-output fit; linear, neighbour and kernel models share one design,
// everything else is fitted column by column.
MultiRegressorPtr fit_multi(const LearnerSpec& spec, const Matrix& x, const Matrix& y, std::uint64_t seed) {
  const auto factory = make_factory(spec);
  const Params& p = spec.params;
  if (spec.type == "ols") return std::make_shared<learners::LinearMultiModel>(learners::fit_ridge_multi(x, y, 0.0));
  if (spec.type == "ridge") {
    return std::make_shared<learners::LinearMultiModel>(learners::fit_ridge_multi(x, y, p.get_double("lambda", 1.0)));
  }
  if (spec.type == "knn") {
    const auto w = p.get_string("weighting", "uniform") == "uniform" ? learners::NeighborWeighting::uniform
                                                                       : learners::NeighborWeighting::distance;
    return std::make_shared<learners::NeighborModel>(learners::fit_knn(x, y, p.get_int("k", 5), w));
  }
  if (spec.type == "svr") return std::make_shared<learners::KernelMultiModel>(learners::fit_svr_multi(x, y, svr_params(p)));
  if (spec.type == "voting") {
    std::vector<MultiRegressorPtr> members;
    for (std::size_t i = 0; i < spec.members.size(); ++i) {
      members.push_back(fit_multi(spec.members[i], x, y, derive_seed(seed, i)));
    }
    const auto w = p.has("weights") ? parse_list(p.get_string("weights", ""), "weights") : std::vector<double>{};
    Vector wv = w.empty() ? Vector() : Vector(Eigen::Map<const Vector>(w.data(), static_cast<Index>(w.size())));
    return std::make_shared<ensemble::VotingMulti>(std::move(members), std::move(wv));
  }
  return std::make_shared<ensemble::ColumnwiseModel>(ensemble::fit_columnwise(x, y, factory, seed));
}

// ---- stage parameters ------------------------------------------------------

Index clamp_count(Index k, Index limit, const std::string& what) {
  if (k > limit) {
    warn(what + "=" + std::to_string(k) + " exceeds the available " + std::to_string(limit) + "; using " +
         std::to_string(limit));
    return limit;
  }
  return k;
}

void check_preprocess(const StageSpec& s) {
  const Params& p = s.params;
  const std::string& n = s.name;
  if (n == "iqr") {
    p.require_known({"multiplier", "violation_fraction"}, n);
    if (!(p.get_double("multiplier", 1.5) >= 0.0)) throw ParameterError("iqr multiplier must be >= 0");
  } else if (n == "zscore") {
    p.require_known({"k", "violation_fraction"}, n);
    if (!(p.get_double("k", 3.0) > 0.0)) throw ParameterError("zscore k must be > 0");
  } else if (n == "lof") {
    p.require_known({"k_neighbors", "threshold"}, n);
    if (p.get_int("k_neighbors", 20) < 1) throw ParameterError("lof k_neighbors must be >= 1");
    p.get_double("threshold", preprocess::kLofDefaultThreshold);
  } else if (n == "iforest") {
    p.require_known({"n_trees", "subsample", "threshold"}, n);
    if (p.get_int("n_trees", 100) < 1 || p.get_int("subsample", 256) < 1) throw ParameterError("iforest sizes must be >= 1");
    p.get_double("threshold", preprocess::kIforestDefaultThreshold);
  } else if (n == "loo_search") {
    p.require_known({"ridge_lambda", "min_gain"}, n);
    if (!(p.get_double("ridge_lambda", 1.0) > 0.0) || !(p.get_double("min_gain", 0.01) >= 0.0)) {
      throw ParameterError("loo_search ridge_lambda must be > 0 and min_gain >= 0");
    }
  } else if (n == "drop_constant" || n == "drop_redundant") {
    p.require_known({}, n);
  } else if (n == "drop_correlated") {
    p.require_known({"threshold"}, n);
    const double t = p.get_double("threshold", 0.95);
    if (!(t > 0.0 && t <= 1.0)) throw ParameterError("drop_correlated threshold must lie in (0, 1]");
  } else if (n == "scaler") {
    p.require_known({"mode"}, n);
    const auto m = p.get_string("mode", "standard");
    if (m != "standard" && m != "maxabs") throw ParameterError("scaler mode must be standard or maxabs");
  } else if (n == "logit") {
    p.require_known({"eps"}, n);
    const double e = p.get_double("eps", preprocess::kLogitEps);
    if (!(e > 0.0 && e < 0.5)) throw ParameterError("logit eps must lie in (0, 0.5)");
  } else if (n == "noise") {
    p.require_known({"sigma", "copies"}, n);
    if (!(p.get_double("sigma", 0.01) >= 0.0) || p.get_int("copies", 1) < 0) {
      throw ParameterError("noise sigma must be >= 0 and copies >= 0");
    }
  } else {
    throw ParameterError("unknown preprocess stage '" + n + "'");
  }
}

void check_dimred(const StageSpec& s) {
  const Params& p = s.params;
  const std::string& n = s.name;
  if (n == "pca" || n == "tsvd") {
    p.require_known({"k"}, n);
    if (p.get_int("k", 2) < 1) throw ParameterError(n + " k must be >= 1");
  } else if (n == "variance_threshold") {
    p.require_known({"threshold", "drop_lowest"}, n);
    if (p.has("threshold") && p.has("drop_lowest")) throw ParameterError("give either threshold or drop_lowest");
    if (!(p.get_double("threshold", 0.0) >= 0.0) || p.get_int("drop_lowest", 0) < 0) {
      throw ParameterError("variance_threshold values must be >= 0");
    }
  } else if (n == "select_k_best") {
    p.require_known({"k", "bins"}, n);
    if (p.get_int("k", 10) < 1 || p.get_int("bins", 10) < 2) throw ParameterError("select_k_best needs k >= 1, bins >= 2");
  } else if (n == "generic_univariate") {
    p.require_known({"k_values", "percentiles", "cv_folds", "bins", "ridge_lambda"}, n);
    const auto ks = parse_list(p.get_string("k_values", ""), "k_values");
    const auto ps = parse_list(p.get_string("percentiles", ""), "percentiles");
    if (ks.empty() && ps.empty()) throw ParameterError("generic_univariate needs k_values or percentiles");
    for (double k : ks) {
      if (!(k >= 1.0) || k != std::floor(k)) throw ParameterError("k_values must be positive integers");
    }
    for (double q : ps) {
      if (!(q > 0.0 && q <= 100.0)) throw ParameterError("percentiles must lie in (0, 100]");
    }
    if (p.get_int("cv_folds", 3) < 2) throw ParameterError("cv_folds must be >= 2");
    if (!(p.get_double("ridge_lambda", 1.0) >= 0.0)) throw ParameterError("ridge_lambda must be >= 0");
  } else if (n == "backward_elimination") {
    p.require_known({"p_threshold", "max_rounds"}, n);
    const double t = p.get_double("p_threshold", 0.05);
    if (!(t > 0.0 && t < 1.0)) throw ParameterError("p_threshold must lie in (0, 1)");
  } else {
    throw ParameterError("unknown dimred stage '" + n + "'");
  }
}

}  // namespace

void validate(const PipelineConfig& c) {
  bool has_logit = false;
  for (const auto& s : c.preprocess) {
    try {
      check_preprocess(s);
    } catch (const Error& e) {
      throw ParameterError("preprocess." + s.name + ": " + e.what());
    }
    has_logit = has_logit || s.name == "logit";
  }
  for (const auto& s : c.dimred) {
    try {
      check_dimred(s);
    } catch (const Error& e) {
      throw ParameterError("dimred." + s.name + ": " + e.what());
    }
  }
  if (c.learner.type.empty()) throw ParameterError("learner: missing type");
  try {
    make_factory(c.learner);
  } catch (const Error& e) {
    throw ParameterError("learner: " + std::string(e.what()));
  }
  if (c.sigmoid_back && !has_logit) throw ParameterError("sigmoid_back needs a logit preprocess stage");
  if (c.target_components < 0) throw ParameterError("target_components must be >= 0");
  if (c.ffl && c.ffl_inputs == FflInputs::matched && c.target_components > 0) {
    throw ParameterError("matched FFL inputs cannot be combined with reduced targets");
  }
}

// ---- fit / predict ---------------------------------------------------------

namespace {

struct FitState {
  Matrix x;
  Matrix y;
  std::vector<Index> rows;    // original row of each current row (-1 for synthetic copies)
  std::vector<Index> origin;  // original feature of each current input column (-1 if derived)
  double target_logit_eps = 0.0;
};

Vector target_summary(const Matrix& y) { return y.rowwise().mean(); }

void apply_sample_mask(FitState& st, const preprocess::SampleMask& mask) {
  const auto keep = mask.kept_rows();
  if (keep.empty()) throw DataError("sample elimination removed every training row");
  st.x = take_rows(st.x, keep);
  st.y = take_rows(st.y, keep);
  std::vector<Index> rows;
  for (Index r : keep) rows.push_back(st.rows[static_cast<std::size_t>(r)]);
  st.rows = std::move(rows);
}

void apply_feature_mask(FitState& st, const preprocess::FeatureMask& mask, const std::string& name,
                        std::vector<FittedStagePtr>& stages) {
  if (mask.kept() == 0) throw DataError("feature elimination removed every input feature");
  st.x = mask.apply(st.x);
  std::vector<Index> origin;
  for (Index c : mask.kept_columns()) origin.push_back(st.origin[static_cast<std::size_t>(c)]);
  st.origin = std::move(origin);
  stages.push_back(std::make_shared<MaskStage>(name, mask));
}

void run_preprocess(const StageSpec& s, FitState& st, std::uint64_t seed, bool sigmoid_back,
                    std::vector<FittedStagePtr>& stages) {
  const Params& p = s.params;
  const std::string& n = s.name;
  if (n == "iqr") {
    apply_sample_mask(st, preprocess::iqr_mask(st.x, p.get_double("multiplier", 1.5), p.get_double("violation_fraction", 0.0)));
  } else if (n == "zscore") {
    apply_sample_mask(st, preprocess::zscore_mask(st.x, p.get_double("k", 3.0), p.get_double("violation_fraction", 0.0)));
  } else if (n == "lof") {
    const Index k = clamp_count(p.get_int("k_neighbors", 20), st.x.rows() - 1, "lof k_neighbors");
    apply_sample_mask(st, preprocess::threshold_mask(preprocess::lof_scores(st.x, k),
                                                     p.get_double("threshold", preprocess::kLofDefaultThreshold)));
  } else if (n == "iforest") {
    preprocess::IforestParams ip;
    ip.n_trees = p.get_int("n_trees", 100);
    ip.subsample = p.get_int("subsample", 256);
    ip.seed = seed;
    apply_sample_mask(st, preprocess::threshold_mask(preprocess::iforest_scores(st.x, ip),
                                                     p.get_double("threshold", preprocess::kIforestDefaultThreshold)));
  } else if (n == "loo_search") {
    apply_sample_mask(st, preprocess::loo_search_mask(st.x, target_summary(st.y), p.get_double("ridge_lambda", 1.0),
                                                      p.get_double("min_gain", 0.01)));
  } else if (n == "drop_constant") {
    apply_feature_mask(st, preprocess::drop_constant_features(st.x), n, stages);
  } else if (n == "drop_redundant") {
    apply_feature_mask(st, preprocess::drop_redundant_features(st.x), n, stages);
  } else if (n == "drop_correlated") {
    apply_feature_mask(st, preprocess::drop_correlated_features(st.x, p.get_double("threshold", 0.95)), n, stages);
  } else if (n == "scaler") {
    const auto mode = p.get_string("mode", "standard") == "standard" ? preprocess::ScalerMode::standard
                                                                     : preprocess::ScalerMode::maxabs;
    auto params = preprocess::fit_scaler(st.x, mode);
    st.x = params.apply(st.x);
    stages.push_back(std::make_shared<ScalerStage>(std::move(params)));
  } else if (n == "logit") {
    const double eps = p.get_double("eps", preprocess::kLogitEps);
    st.x = preprocess::logit_transform(st.x, eps);
    if (sigmoid_back && st.target_logit_eps == 0.0) {
      st.y = preprocess::logit_transform(st.y, eps);
      st.target_logit_eps = eps;
    }
    stages.push_back(std::make_shared<LogitStage>(eps));
  } else if (n == "noise") {
    std::vector<std::string> ids;
    for (Index i = 0; i < st.x.rows(); ++i) ids.push_back("r" + std::to_string(i));
    if (st.x.cols() != st.y.cols()) throw ShapeError("noise augmentation needs inputs as wide as targets");
    const LongitudinalDataset ds(FeatureTable(ids, st.x), FeatureTable(ids, st.y));
    const Index copies = p.get_int("copies", 1);
    const auto aug = preprocess::augment_noise(ds, p.get_double("sigma", 0.01), copies, seed);
    st.x = aug.t0().rows();
    st.y = aug.targets().rows();
    const std::vector<Index> orig = st.rows;
    for (Index c = 0; c < copies; ++c) st.rows.insert(st.rows.end(), orig.size(), Index{-1});
  }
}

void run_dimred(const StageSpec& s, FitState& st, std::uint64_t seed, std::vector<FittedStagePtr>& stages) {
  const Params& p = s.params;
  const std::string& n = s.name;
  if (n == "pca" || n == "tsvd") {
    const Index k = clamp_count(p.get_int("k", 2), std::min(st.x.rows(), st.x.cols()), n + " k");
    auto proj = n == "pca" ? dimred::fit_pca(st.x, k) : dimred::fit_tsvd(st.x, k);
    st.x = proj.project(st.x);
    st.origin.assign(static_cast<std::size_t>(k), Index{-1});
    stages.push_back(std::make_shared<ProjectionStage>(n, std::move(proj)));
    return;
  }
  dimred::SelectionReport rep;
  if (n == "variance_threshold") {
    dimred::VarianceThresholdParams vp;
    if (p.has("threshold")) vp.threshold = p.get_double("threshold", 0.0);
    if (p.has("drop_lowest")) vp.drop_lowest = clamp_count(p.get_int("drop_lowest", 0), st.x.cols() - 1, "drop_lowest");
    rep = dimred::variance_threshold(st.x, vp);
  } else if (n == "select_k_best") {
    const Index k = clamp_count(p.get_int("k", 10), st.x.cols(), "select_k_best k");
    rep = dimred::select_k_best_mi(st.x, target_summary(st.y), k, p.get_int("bins", 10));
  } else if (n == "generic_univariate") {
    dimred::UnivariateCandidates cand;
    for (double k : parse_list(p.get_string("k_values", ""), "k_values")) {
      cand.k_values.push_back(clamp_count(static_cast<Index>(k), st.x.cols(), "generic_univariate k"));
    }
    cand.percentiles = parse_list(p.get_string("percentiles", ""), "percentiles");
    const double lambda = p.get_double("ridge_lambda", 1.0);
    const dimred::FitPredict learner = [lambda](const Matrix& xtr, const Vector& ytr, const Matrix& xte) {
      return learners::fit_ridge(xtr, ytr, lambda).predict(xte);
    };
    rep = dimred::generic_univariate_select(st.x, target_summary(st.y), cand, p.get_int("cv_folds", 3), learner, seed,
                                            p.get_int("bins", 10));
  } else if (n == "backward_elimination") {
    dimred::BackwardEliminationParams bp;
    bp.p_threshold = p.get_double("p_threshold", 0.05);
    bp.max_rounds = p.get_int("max_rounds", -1);
    rep = dimred::backward_elimination(st.x, target_summary(st.y), bp);
  }
  apply_feature_mask(st, rep.selected, n, stages);
}

std::shared_ptr<learners::LinearModel> constant_model(double value) {
  return std::make_shared<learners::LinearModel>(Vector(0), value);
}

}  // namespace

FittedPipeline fit_pipeline(const PipelineConfig& config, const LongitudinalDataset& train) {
  validate(config);
  if (!train.labeled()) throw DataError("fitting needs a labeled dataset (t1 present)");
  FittedPipeline fp;
  fp.config_ = config;
  FitState st;
  st.x = train.t0().rows();
  st.y = train.targets().rows();
  fp.d_in_ = st.x.cols();
  fp.d_out_ = st.y.cols();
  st.rows.resize(static_cast<std::size_t>(st.x.rows()));
  std::iota(st.rows.begin(), st.rows.end(), Index{0});
  st.origin.resize(static_cast<std::size_t>(st.x.cols()));
  std::iota(st.origin.begin(), st.origin.end(), Index{0});

  std::uint64_t stage_index = 0;
  for (const auto& s : config.preprocess) {
    const std::uint64_t seed = derive_seed(config.seed, stage_index++);
    try {
      run_preprocess(s, st, seed, config.sigmoid_back, fp.stages_);
    } catch (const Error& e) {
      throw StageError("preprocess." + s.name, e.what());
    }
  }
  for (const auto& s : config.dimred) {
    const std::uint64_t seed = derive_seed(config.seed, stage_index++);
    try {
      run_dimred(s, st, seed, fp.stages_);
    } catch (const Error& e) {
      throw StageError("dimred." + s.name, e.what());
    }
  }
  const std::uint64_t seed = derive_seed(config.seed, stage_index);
  try {
    Matrix y = st.y;
    if (config.target_components > 0) {
      const Index k = clamp_count(config.target_components, std::min(y.rows(), y.cols()), "target_components");
      auto proj = std::make_shared<dimred::Projection>(dimred::fit_pca(y, k));
      y = proj->project(y);
      fp.target_projection_ = std::move(proj);
    }
    if (!config.ffl) {
      fp.model_ = fit_multi(config.learner, st.x, y, seed);
    } else if (config.ffl_inputs == FflInputs::all) {
      fp.model_ = std::make_shared<ensemble::ColumnwiseModel>(
          ensemble::fit_columnwise(st.x, y, make_factory(config.learner), seed));
    } else {
      std::map<Index, Index> column_of;
      for (std::size_t c = 0; c < st.origin.size(); ++c) {
        if (st.origin[c] >= 0) column_of.emplace(st.origin[c], static_cast<Index>(c));
      }
      const auto factory = make_factory(config.learner);
      std::vector<Index> inputs(static_cast<std::size_t>(y.cols()), -1);
      std::vector<RegressorPtr> models(static_cast<std::size_t>(y.cols()));
      Index missing = 0;
      for (Index j = 0; j < y.cols(); ++j) {
        const auto it = column_of.find(j);
        if (it != column_of.end()) {
          inputs[static_cast<std::size_t>(j)] = it->second;
        } else {
          ++missing;
        }
      }
      if (missing > 0) {
        warn(std::to_string(missing) + " target(s) lost their matched input; predicting their training mean");
      }
      kernels::parallel_for(y.cols(), [&](Index j) {
        const Index c = inputs[static_cast<std::size_t>(j)];
        models[static_cast<std::size_t>(j)] =
            c >= 0 ? factory(Matrix(st.x.col(c)), y.col(j), derive_seed(seed, static_cast<std::uint64_t>(j)))
                   : constant_model(y.col(j).mean());
      });
      fp.model_ = std::make_shared<MatchedModel>(std::move(inputs), std::move(models), st.x.cols());
    }
  } catch (const Error& e) {
    throw StageError("learner." + config.learner.type, e.what());
  }
  fp.logit_eps_ = st.target_logit_eps;
  for (Index r : st.rows) {
    if (r >= 0) fp.kept_rows_.push_back(r);
  }
  return fp;
}

Matrix FittedPipeline::predict(const Matrix& t0) const {
  if (!model_) throw Error("pipeline is not fitted");
  if (t0.cols() != d_in_) {
    throw ShapeError("pipeline expects " + std::to_string(d_in_) + " input features, got " + std::to_string(t0.cols()));
  }
  Matrix x = t0;
  for (const auto& s : stages_) x = s->transform(x);
  Matrix out = model_->predict(x);
  if (target_projection_) out = target_projection_->reconstruct(out);
  if (logit_eps_ > 0.0) out = preprocess::sigmoid_transform(out);
  if (config_.clip01) out = out.cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

FeatureTable FittedPipeline::predict(const FeatureTable& t0) const {
  return FeatureTable(t0.subject_ids(), predict(t0.rows()));
}

Index FittedPipeline::model_count() const {
  if (!config_.ffl) return 1;
  return model_ ? model_->n_outputs() : 0;
}

}  // namespace connecto::pipeline
