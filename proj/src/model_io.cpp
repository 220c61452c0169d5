#include <cstdint>
#include <fstream>
#include <sstream>

#include <cereal/archives/binary.hpp>
#include <cereal/types/memory.hpp>
#include <cereal/types/polymorphic.hpp>
#include <cereal/types/string.hpp>
#include <cereal/types/vector.hpp>

#include "connecto/ensemble.hpp"
#include "connecto/learners.hpp"
#include "connecto/pipeline.hpp"
#include "stages.hpp"

namespace cereal {

template <class Archive, int R, int C, int O, int MR, int MC>
void save(Archive& ar, const Eigen::Matrix<double, R, C, O, MR, MC>& m) {
  const std::int64_t rows = m.rows();
  const std::int64_t cols = m.cols();
  ar(rows, cols);
  ar(binary_data(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double)));
}

template <class Archive, int R, int C, int O, int MR, int MC>
void load(Archive& ar, Eigen::Matrix<double, R, C, O, MR, MC>& m) {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  ar(rows, cols);
  if (rows < 0 || cols < 0) throw connecto::IngestionError("corrupt matrix header in model file");
  m.resize(rows, cols);
  ar(binary_data(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double)));
}

}  // namespace cereal

namespace connecto {

namespace {

template <class T>
std::vector<std::shared_ptr<T>> unconst(const std::vector<std::shared_ptr<const T>>& v) {
  std::vector<std::shared_ptr<T>> out;
  for (const auto& p : v) out.push_back(std::const_pointer_cast<T>(p));
  return out;
}

template <class T>
std::vector<std::shared_ptr<const T>> to_const(std::vector<std::shared_ptr<T>> v) {
  return {v.begin(), v.end()};
}

}  // namespace

namespace ensemble {

template <class Archive>
void EnsembleModel::save(Archive& ar) const {
  ar(unconst(members_), weights_, combiner_, init_, learning_rate_, n_inputs_);
}
template <class Archive>
void EnsembleModel::load(Archive& ar) {
  std::vector<std::shared_ptr<Regressor>> members;
  ar(members, weights_, combiner_, init_, learning_rate_, n_inputs_);
  members_ = to_const(std::move(members));
}

template <class Archive>
void ColumnwiseModel::save(Archive& ar) const {
  ar(unconst(columns_), n_inputs_);
}
template <class Archive>
void ColumnwiseModel::load(Archive& ar) {
  std::vector<std::shared_ptr<Regressor>> columns;
  ar(columns, n_inputs_);
  columns_ = to_const(std::move(columns));
}

template <class Archive>
void VotingMulti::save(Archive& ar) const {
  ar(unconst(members_), weights_);
}
template <class Archive>
void VotingMulti::load(Archive& ar) {
  std::vector<std::shared_ptr<learners::MultiRegressor>> members;
  ar(members, weights_);
  members_ = to_const(std::move(members));
}

}  // namespace ensemble

namespace pipeline {

template <class Archive>
void MatchedModel::save(Archive& ar) const {
  ar(input_of_target_, unconst(models_), n_inputs_);
}
template <class Archive>
void MatchedModel::load(Archive& ar) {
  std::vector<std::shared_ptr<learners::Regressor>> models;
  ar(input_of_target_, models, n_inputs_);
  models_ = to_const(std::move(models));
}

template <class Archive>
void FittedPipeline::save(Archive& ar) const {
  const bool has_projection = target_projection_ != nullptr;
  ar(serialize_config(config_), d_in_, d_out_, kept_rows_, unconst(stages_),
     std::const_pointer_cast<learners::MultiRegressor>(model_), has_projection, logit_eps_);
  if (has_projection) ar(*target_projection_);
}
template <class Archive>
void FittedPipeline::load(Archive& ar) {
  std::string config_text;
  std::vector<std::shared_ptr<FittedStage>> stages;
  std::shared_ptr<learners::MultiRegressor> model;
  bool has_projection = false;
  ar(config_text, d_in_, d_out_, kept_rows_, stages, model, has_projection, logit_eps_);
  config_ = parse_config(config_text, "<model file>");
  stages_ = to_const(std::move(stages));
  model_ = std::move(model);
  target_projection_.reset();
  if (has_projection) {
    auto proj = std::make_shared<dimred::Projection>();
    ar(*proj);
    target_projection_ = std::move(proj);
  }
}

namespace {

constexpr char kMagic[8] = {'C', 'N', 'T', 'O', 'F', 'P', 'L', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

void write_to(std::ostream& os, const FittedPipeline& fp) {
  os.write(kMagic, sizeof(kMagic));
  cereal::BinaryOutputArchive ar(os);
  ar(kFormatVersion, fp);
}

FittedPipeline read_from(std::istream& is, const std::string& source) {
  char magic[sizeof(kMagic)] = {};
  is.read(magic, sizeof(magic));
  if (!is || !std::equal(magic, magic + sizeof(magic), kMagic)) {
    throw IngestionError(source + ": not a fitted pipeline file");
  }
  FittedPipeline fp;
  try {
    cereal::BinaryInputArchive ar(is);
    std::uint32_t version = 0;
    ar(version);
    if (version != kFormatVersion) {
      throw IngestionError(source + ": unsupported model format version " + std::to_string(version));
    }
    ar(fp);
  } catch (const cereal::Exception& e) {
    throw IngestionError(source + ": corrupt model file (" + e.what() + ")");
  }
  return fp;
}

}  // namespace

void save_fitted(const FittedPipeline& fp, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IngestionError("cannot write " + path.string());
  write_to(os, fp);
  if (!os) throw IngestionError("failed writing " + path.string());
}

FittedPipeline load_fitted(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestionError("cannot open " + path.string());
  return read_from(is, path.string());
}

std::string save_fitted_to_string(const FittedPipeline& fp) {
  std::ostringstream os(std::ios::binary);
  write_to(os, fp);
  return os.str();
}

FittedPipeline load_fitted_from_string(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  return read_from(is, "<memory>");
}

}  // namespace pipeline

}  // namespace connecto

CEREAL_REGISTER_TYPE(connecto::learners::LinearModel)
CEREAL_REGISTER_TYPE(connecto::learners::BayesianLinearModel)
CEREAL_REGISTER_TYPE(connecto::learners::KernelModel)
CEREAL_REGISTER_TYPE(connecto::learners::NeighborRegressor)
CEREAL_REGISTER_TYPE(connecto::ensemble::RegressionTree)
CEREAL_REGISTER_TYPE(connecto::ensemble::EnsembleModel)
CEREAL_REGISTER_POLYMORPHIC_RELATION(connecto::learners::Regressor, connecto::learners::LinearModel)
CEREAL_REGISTER_POLYMORPHIC_RELATION(connecto::learners::Regressor, connecto::learners::BayesianLinearModel)
CEREAL_REGISTER_POLYMORPHIC_RELATION(connecto::learners::Regressor, connecto::learners::KernelModel)
CEREAL_REGISTER_POLYMORPHIC_RELATION(connecto::learners::Regressor, connecto::learners::NeighborRegressor)
CEREAL_REGISTER_POLYMORPHIC_RELATION(connecto::learners::Regressor, connecto::ensemble::RegressionTree)
CEREAL_REGISTER_POLYMORPHIC_RELATION(connecto::learners::Regressor, connecto::ensemble::EnsembleModel)

CEREAL_REGISTER_TYPE(connecto::learners::LinearMultiModel)
CEREAL_REGISTER_TYPE(connecto::learners::KernelMultiModel)
CEREAL_REGISTER_TYPE(connecto::learners::NeighborModel)
CEREAL_REGISTER_TYPE(connecto::ensemble::ColumnwiseModel)
CEREAL_REGISTER_TYPE(connecto::ensemble::VotingMulti)
CEREAL_REGISTER_TYPE(connecto::pipeline::MatchedModel)
CEREAL_REGISTER_POLYMORPHIC_RELATION(connecto::learners::MultiRegressor, connecto::learners::LinearMultiModel)
CEREAL_REGISTER_POLYMORPHIC_RELATION(connecto::learners::MultiRegressor, connecto::learners::KernelMultiModel)
CEREAL_REGISTER_POLYMORPHIC_RELATION(connecto::learners::MultiRegressor, connecto::learners::NeighborModel)
CEREAL_REGISTER_POLYMORPHIC_RELATION(connecto::learners::MultiRegressor, connecto::ensemble::ColumnwiseModel)
CEREAL_REGISTER_POLYMORPHIC_RELATION(connecto::learners::MultiRegressor, connecto::ensemble::VotingMulti)
CEREAL_REGISTER_POLYMORPHIC_RELATION(connecto::learners::MultiRegressor, connecto::pipeline::MatchedModel)

CEREAL_REGISTER_TYPE(connecto::pipeline::detail::MaskStage)
CEREAL_REGISTER_TYPE(connecto::pipeline::detail::ScalerStage)
CEREAL_REGISTER_TYPE(connecto::pipeline::detail::LogitStage)
CEREAL_REGISTER_TYPE(connecto::pipeline::detail::ProjectionStage)
CEREAL_REGISTER_POLYMORPHIC_RELATION(connecto::pipeline::FittedStage, connecto::pipeline::detail::MaskStage)
CEREAL_REGISTER_POLYMORPHIC_RELATION(connecto::pipeline::FittedStage, connecto::pipeline::detail::ScalerStage)
CEREAL_REGISTER_POLYMORPHIC_RELATION(connecto::pipeline::FittedStage, connecto::pipeline::detail::LogitStage)
CEREAL_REGISTER_POLYMORPHIC_RELATION(connecto::pipeline::FittedStage, connecto::pipeline::detail::ProjectionStage)
