#pragma once

// Fitted input transforms replayed at predict time.

#include <string>

#include "connecto/dimred.hpp"
#include "connecto/pipeline.hpp"
#include "connecto/preprocess.hpp"

namespace connecto::pipeline::detail {

class MaskStage : public FittedStage {
 public:
  MaskStage() = default;
  MaskStage(std::string name, preprocess::FeatureMask mask) : name_(std::move(name)), mask_(std::move(mask)) {}
  Matrix transform(const Matrix& x) const override { return mask_.apply(x); }
  std::string name() const override { return name_; }
  template <class Archive>
  void serialize(Archive& ar) {
    ar(name_, mask_.keep);
  }

 private:
  std::string name_;
  preprocess::FeatureMask mask_;
};

class ScalerStage : public FittedStage {
 public:
  ScalerStage() = default;
  explicit ScalerStage(preprocess::ScalerParams p) : p_(std::move(p)) {}
  Matrix transform(const Matrix& x) const override { return p_.apply(x); }
  std::string name() const override { return "scaler"; }
  template <class Archive>
  void serialize(Archive& ar) {
    ar(p_.mode, p_.mean, p_.scale, p_.degenerate);
  }

 private:
  preprocess::ScalerParams p_;
};

class LogitStage : public FittedStage {
 public:
  LogitStage() = default;
  explicit LogitStage(double eps) : eps_(eps) {}
  Matrix transform(const Matrix& x) const override { return preprocess::logit_transform(x, eps_); }
  std::string name() const override { return "logit"; }
  template <class Archive>
  void serialize(Archive& ar) {
    ar(eps_);
  }

 private:
  double eps_ = preprocess::kLogitEps;
};

class ProjectionStage : public FittedStage {
 public:
  ProjectionStage() = default;
  ProjectionStage(std::string name, dimred::Projection p) : name_(std::move(name)), p_(std::move(p)) {}
  Matrix transform(const Matrix& x) const override { return p_.project(x); }
  std::string name() const override { return name_; }
  template <class Archive>
  void serialize(Archive& ar) {
    ar(name_, p_);
  }

 private:
  std::string name_;
  dimred::Projection p_;
};

}  // namespace connecto::pipeline::detail
