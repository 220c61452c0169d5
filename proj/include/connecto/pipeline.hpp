#pragma once

// Declarative pipelines: preprocessing -> dimensionality reduction ->
// learner, the feature-focused (one model per target edge) wrapper, the
// config file format, and the bundled team configurations.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "connecto/common.hpp"
#include "connecto/connectome.hpp"
#include "connecto/dimred.hpp"
#include "connecto/ensemble.hpp"
#include "connecto/learners.hpp"
#include "connecto/params.hpp"

namespace connecto::pipeline {

struct StageSpec {
  std::string name;
  Params params;

  bool operator==(const StageSpec& o) const { return name == o.name && params == o.params; }
};

struct LearnerSpec {
  std::string type;
  Params params;
  std::vector<LearnerSpec> members;  // voting
  std::vector<LearnerSpec> base;     // bagging / adaboost: at most one

  bool operator==(const LearnerSpec& o) const {
    return type == o.type && params == o.params && members == o.members && base == o.base;
  }
};

/// Which inputs a per-target model sees: every transformed input, or only
/// the input column derived from the same edge as the target.
enum class FflInputs { all, matched };

struct PipelineConfig {
  std::string name = "pipeline";
  std::vector<StageSpec> preprocess;
  std::vector<StageSpec> dimred;
  LearnerSpec learner;
  bool ffl = false;
  FflInputs ffl_inputs = FflInputs::all;
  Index target_components = 0;  // > 0: learn in a PCA space of the targets
  bool sigmoid_back = false;    // targets pass through the logit stage; outputs through sigmoid
  bool clip01 = false;
  std::uint64_t seed = 0;

  bool operator==(const PipelineConfig& o) const;
};

/// Registered stage and learner names.
const std::vector<std::string>& preprocess_stage_names();
const std::vector<std::string>& dimred_stage_names();
const std::vector<std::string>& learner_type_names();

/// Throws ParameterError on an unknown name, unknown key or out-of-domain
/// value.
void validate(const PipelineConfig& config);

// ---- config file format ----------------------------------------------------
//
//   # comment
//   [pipeline]            name, seed, ffl, ffl_inputs, target_components,
//                         sigmoid_back, clip01
//   [preprocess.<stage>]  stage parameters; stages run in file order
//   [dimred.<stage>]
//   [learner]             type = <learner>, then its parameters
//   [learner.members.<i>] nested voting members (any depth)
//   [learner.base]        base learner of bagging / adaboost
//
// Values are `key = value`; whitespace around keys and values is trimmed.

PipelineConfig parse_config(const std::string& text, const std::string& source_name = "<memory>");
std::string serialize_config(const PipelineConfig& config);
PipelineConfig load_config_file(const std::filesystem::path& path);

// ---- team registry ---------------------------------------------------------

std::vector<int> team_ids();
PipelineConfig load_team_config(int team);

// ---- fitting ---------------------------------------------------------------

/// A fitted input transform replayed unchanged at predict time.
class FittedStage {
 public:
  virtual ~FittedStage() = default;
  virtual Matrix transform(const Matrix& x) const = 0;
  virtual std::string name() const = 0;
};
using FittedStagePtr = std::shared_ptr<const FittedStage>;

/// Per-target models over a single matched input column (or none, in which
/// case the model is a constant).
class MatchedModel : public learners::MultiRegressor {
 public:
  MatchedModel() = default;
  MatchedModel(std::vector<Index> input_of_target, std::vector<learners::RegressorPtr> models, Index n_inputs);

  Matrix predict(const Matrix& x) const override;
  Index n_inputs() const override { return n_inputs_; }
  Index n_outputs() const override { return static_cast<Index>(models_.size()); }
  std::string kind() const override { return "matched"; }
  const std::vector<Index>& input_of_target() const { return input_of_target_; }

  template <class Archive>
  void save(Archive& ar) const;
  template <class Archive>
  void load(Archive& ar);

 private:
  std::vector<Index> input_of_target_;
  std::vector<learners::RegressorPtr> models_;
  Index n_inputs_ = 0;
};

class FittedPipeline {
 public:
  FittedPipeline() = default;

  FeatureTable predict(const FeatureTable& t0) const;
  Matrix predict(const Matrix& t0) const;

  const PipelineConfig& config() const { return config_; }
  Index n_inputs() const { return d_in_; }
  Index n_outputs() const { return d_out_; }
  /// Training rows that survived sample elimination (original indices).
  const std::vector<Index>& kept_rows() const { return kept_rows_; }
  const std::vector<FittedStagePtr>& stages() const { return stages_; }
  const learners::MultiRegressor& model() const { return *model_; }
  /// Number of learners fitted (one per target under FFL).
  Index model_count() const;

  template <class Archive>
  void save(Archive& ar) const;
  template <class Archive>
  void load(Archive& ar);

 private:
  friend FittedPipeline fit_pipeline(const PipelineConfig&, const LongitudinalDataset&);

  PipelineConfig config_;
  Index d_in_ = 0;
  Index d_out_ = 0;
  std::vector<Index> kept_rows_;
  std::vector<FittedStagePtr> stages_;
  learners::MultiRegressorPtr model_;
  std::shared_ptr<const dimred::Projection> target_projection_;
  double logit_eps_ = 0.0;  // > 0 when targets were logit-mapped
};

/// Errors raised inside a stage are rethrown as StageError naming it.
FittedPipeline fit_pipeline(const PipelineConfig& config, const LongitudinalDataset& train);

/// Versioned binary persistence of fitted pipelines.
void save_fitted(const FittedPipeline& fp, const std::filesystem::path& path);
FittedPipeline load_fitted(const std::filesystem::path& path);
std::string save_fitted_to_string(const FittedPipeline& fp);
FittedPipeline load_fitted_from_string(const std::string& bytes);

}  // namespace connecto::pipeline
