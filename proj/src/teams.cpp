#include "connecto/pipeline.hpp"

namespace connecto::pipeline {

namespace {

LearnerSpec learner(std::string type, Params params = {}) {
  LearnerSpec l;
  l.type = std::move(type);
  l.params = std::move(params);
  return l;
}

LearnerSpec with_base(LearnerSpec l, LearnerSpec base) {
  l.base.push_back(std::move(base));
  return l;
}

LearnerSpec voting(std::vector<LearnerSpec> members) {
  LearnerSpec l = learner("voting");
  l.members = std::move(members);
  return l;
}

PipelineConfig make(int team, std::vector<StageSpec> pre, std::vector<StageSpec> dr, LearnerSpec l, bool ffl) {
  PipelineConfig c;
  c.name = "team-" + std::to_string(team);
  c.preprocess = std::move(pre);
  c.dimred = std::move(dr);
  c.learner = std::move(l);
  c.ffl = ffl;
  c.ffl_inputs = ffl ? FflInputs::matched : FflInputs::all;
  c.seed = static_cast<std::uint64_t>(team);
  return c;
}

const StageSpec kLof{"lof", {{"k_neighbors", "20"}, {"threshold", "1.5"}}};
const StageSpec kIforest{"iforest", {{"n_trees", "100"}, {"subsample", "256"}, {"threshold", "0.6"}}};
const StageSpec kZscore{"zscore", {{"k", "3"}}};
const StageSpec kConstant{"drop_constant", {}};
const StageSpec kRedundant{"drop_redundant", {}};
const StageSpec kStandard{"scaler", {{"mode", "standard"}}};

LearnerSpec small_forest() { return learner("random_forest", {{"n_trees", "20"}, {"feature_fraction", "0.33"}}); }
LearnerSpec small_adaboost() {
  return with_base(learner("adaboost", {{"n_estimators", "10"}}), learner("tree", {{"max_depth", "3"}}));
}
LearnerSpec small_boosting(const std::string& variant) {
  return learner("gradient_boosting", {{"n_estimators", "30"}, {"learning_rate", "0.1"}, {"max_depth", "3"}, {"variant", variant}});
}

}  // namespace

std::vector<int> team_ids() {
  std::vector<int> ids;
  for (int t = 1; t <= 20; ++t) ids.push_back(t);
  return ids;
}

PipelineConfig load_team_config(int team) {
  switch (team) {
    case 1:
      return make(1, {kLof}, {}, learner("bayesian_ridge"), true);
    case 2:
      return make(2, {}, {}, learner("huber", {{"epsilon", "1.35"}, {"lambda", "0.0001"}}), true);
    case 3: {
      PipelineConfig c = make(
          3, {},
          {{"generic_univariate", {{"k_values", "50,100,200"}, {"percentiles", "25,50"}, {"cv_folds", "3"}}},
           {"pca", {{"k", "21"}}}},
          voting({learner("ridge", {{"lambda", "1"}}), small_boosting("second_order"), learner("knn", {{"k", "5"}}),
                  learner("elastic_net", {{"alpha", "0.0001"}, {"l1_ratio", "0.5"}}), small_boosting("classic"),
                  small_adaboost(), learner("lasso", {{"alpha", "0.0001"}}), learner("omp", {{"n_nonzero", "5"}}),
                  small_boosting("second_order")}),
          true);
      c.ffl_inputs = FflInputs::all;
      c.target_components = 21;
      return c;
    }
    case 4:
      return make(4, {kIforest, kStandard}, {{"variance_threshold", {{"drop_lowest", "6"}}}},
                  voting({learner("ridge", {{"lambda", "1"}}), learner("ols")}), false);
    case 5:
      return make(5, {kZscore}, {}, small_forest(), false);
    case 6:
      return make(6, {kLof, kConstant}, {},
                  with_base(learner("bagging", {{"n_estimators", "10"}}), learner("pls", {{"n_components", "5"}})), false);
    case 7: {
      PipelineConfig c = make(7, {{"logit", {{"eps", "0.000001"}}}}, {{"select_k_best", {{"k", "100"}}}},
                              learner("svr", {{"c", "1"}, {"epsilon", "0.1"}, {"kernel", "rbf"}}), false);
      c.sigmoid_back = true;
      return c;
    }
    case 8:
      return make(8, {kConstant}, {{"select_k_best", {{"k", "50"}}}},
                  voting({learner("knn", {{"k", "5"}}), small_boosting("classic"), small_adaboost()}), false);
    case 9:
      return make(9, {}, {{"tsvd", {{"k", "20"}}}},
                  voting({small_forest(), learner("random_forest", {{"n_trees", "10"}, {"split_source", "kmeans"}})}), false);
    case 10:
      return make(10, {kIforest, kStandard}, {{"pca", {{"k", "20"}}}}, small_forest(), false);
    case 11:
      return make(11, {{"iqr", {{"multiplier", "1.5"}}}}, {}, learner("ols"), true);
    case 12:
      return make(12, {}, {}, learner("knn", {{"k", "5"}}), true);
    case 13:
      return make(13, {kZscore}, {}, learner("ols"), false);
    case 14:
      return make(14, {kIforest, kConstant}, {}, learner("ridge", {{"lambda", "1"}}), false);
    case 15:
      return make(15, {kRedundant}, {}, voting({learner("bayesian_ridge"), learner("knn", {{"k", "5"}}), small_adaboost()}),
                  false);
    case 16:
      return make(16, {kConstant, kRedundant}, {}, small_adaboost(), false);
    case 17:
      return make(17, {{"loo_search", {{"ridge_lambda", "1"}, {"min_gain", "0.01"}}}, kStandard,
                      {"drop_correlated", {{"threshold", "0.95"}}}},
                  {{"backward_elimination", {{"p_threshold", "0.05"}}}}, learner("ridge", {{"lambda", "1"}}), false);
    case 18:
      return make(18, {{"noise", {{"sigma", "0.01"}, {"copies", "1"}}}}, {},
                  learner("extra_trees", {{"n_trees", "50"}}), true);
    case 19: {
      PipelineConfig c = make(19, {{"logit", {{"eps", "0.000001"}}}}, {{"select_k_best", {{"k", "200"}}}},
                              learner("svr", {{"c", "10"}, {"epsilon", "0.05"}, {"kernel", "rbf"}}), false);
      c.sigmoid_back = true;
      return c;
    }
    case 20:
      return make(20, {kConstant, kRedundant}, {{"pca", {{"k", "20"}}}},
                  learner("svr", {{"c", "1"}, {"epsilon", "0.1"}, {"kernel", "rbf"}}), false);
    default:
      throw LookupError("unknown team id " + std::to_string(team) + " (expected 1..20)");
  }
}

}  // namespace connecto::pipeline
