#pragma once

// Single-model regressors: the linear family, Bayesian ridge, Huber, SVR,
// k-nearest neighbours, PLS and k-means.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "connecto/common.hpp"

namespace connecto::learners {

/// A fitted single-output model. Implementations are immutable; predict is
/// reentrant.
class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual Vector predict(const Matrix& x) const = 0;
  virtual Index n_inputs() const = 0;
  virtual std::string kind() const = 0;
};
using RegressorPtr = std::shared_ptr<const Regressor>;

/// A fitted multi-output model.
class MultiRegressor {
 public:
  virtual ~MultiRegressor() = default;
  virtual Matrix predict(const Matrix& x) const = 0;
  virtual Index n_inputs() const = 0;
  virtual Index n_outputs() const = 0;
  virtual std::string kind() const = 0;
};
using MultiRegressorPtr = std::shared_ptr<const MultiRegressor>;

enum class Regularization { none, l0, l1, l2, elastic, bayesian, huber, pls };
std::string to_string(Regularization r);

class LinearModel : public Regressor {
 public:
  LinearModel() = default;
  LinearModel(Vector weights, double intercept, Regularization reg = Regularization::none);

  Vector predict(const Matrix& x) const override;
  Index n_inputs() const override { return weights_.size(); }
  std::string kind() const override { return "linear"; }

  const Vector& weights() const { return weights_; }
  double intercept() const { return intercept_; }
  Regularization regularization() const { return regularization_; }
  Index nonzeros() const;

  template <class Archive>
  void serialize(Archive& ar) {
    ar(weights_, intercept_, regularization_);
  }

 private:
  Vector weights_;
  double intercept_ = 0.0;
  Regularization regularization_ = Regularization::none;
};

/// Shared-design linear model: one weight column per output.
class LinearMultiModel : public MultiRegressor {
 public:
  LinearMultiModel() = default;
  LinearMultiModel(Matrix weights, Vector intercepts);

  Matrix predict(const Matrix& x) const override;
  Index n_inputs() const override { return weights_.rows(); }
  Index n_outputs() const override { return weights_.cols(); }
  std::string kind() const override { return "linear_multi"; }

  const Matrix& weights() const { return weights_; }
  const Vector& intercepts() const { return intercepts_; }
  LinearModel column(Index j) const;

  template <class Archive>
  void serialize(Archive& ar) {
    ar(weights_, intercepts_);
  }

 private:
  Matrix weights_;
  Vector intercepts_;
};

// ---- closed-form linear solvers ------------------------------------------

/// Jitter added to singular normal equations.
inline constexpr double kSingularJitter = 1e-10;

/// Least squares with intercept. Falls back to a jittered solve (with a
/// warning) when the centred design is rank deficient.
LinearModel fit_ols(const Matrix& x, const Vector& y);

/// Ridge: minimises sum (y - Xw - b)^2 + lambda ||w||^2; b unpenalised.
LinearModel fit_ridge(const Matrix& x, const Vector& y, double lambda);

/// Both of the above for several targets sharing one design.
LinearMultiModel fit_ridge_multi(const Matrix& x, const Matrix& y, double lambda);

// ---- iterative linear solvers --------------------------------------------

struct ElasticNetParams {
  double alpha = 1.0;
  double l1_ratio = 0.5;
  double tol = 1e-6;
  Index max_iter = 10000;
};

struct ElasticNetFit {
  LinearModel model;
  Index iterations = 0;
  bool converged = false;
};

/// Coordinate descent on internally standardised features minimising
/// (1/2n)||y - Zb||^2 + alpha l1 ||b||_1 + alpha (1 - l1)/2 ||b||^2, then
/// mapped back to the original feature scale.
ElasticNetFit fit_elastic_net(const Matrix& x, const Vector& y, const ElasticNetParams& params);

/// Largest KKT violation of a standardised-problem solution (test hook).
double elastic_net_kkt_residual(const Matrix& x, const Vector& y, const LinearModel& model,
                                double alpha, double l1_ratio);

/// Orthogonal matching pursuit with at most n_nonzero active columns.
LinearModel fit_omp(const Matrix& x, const Vector& y, Index n_nonzero);

/// NIPALS PLS1 on centred data expressed as equivalent linear weights.
LinearModel fit_pls1(const Matrix& x, const Vector& y, Index n_components);

// ---- Bayesian ridge ----------------------------------------------------

struct BayesianRidgeParams {
  Index max_iter = 300;
  double tol = 1e-4;
  double alpha_1 = 1e-6;
  double alpha_2 = 1e-6;
  double lambda_1 = 1e-6;
  double lambda_2 = 1e-6;
};

class BayesianLinearModel : public LinearModel {
 public:
  BayesianLinearModel() = default;
  BayesianLinearModel(LinearModel base, double alpha, double lambda, Vector posterior_variance,
                      bool converged, Index iterations);

  std::string kind() const override { return "bayesian_linear"; }
  double alpha() const { return alpha_; }    // noise precision
  double lambda() const { return lambda_; }  // weight precision
  const Vector& posterior_variance() const { return posterior_variance_; }
  bool converged() const { return converged_; }
  Index iterations() const { return iterations_; }

  template <class Archive>
  void serialize(Archive& ar) {
    ar(static_cast<LinearModel&>(*this), alpha_, lambda_, posterior_variance_, converged_, iterations_);
  }

 private:
  double alpha_ = 1.0;
  double lambda_ = 1.0;
  Vector posterior_variance_;
  bool converged_ = false;
  Index iterations_ = 0;
};

/// Evidence maximisation with MacKay fixed-point updates.
BayesianLinearModel fit_bayesian_ridge(const Matrix& x, const Vector& y,
                                       const BayesianRidgeParams& params = {});

// ---- Huber ---------------------------------------------------------------

struct HuberParams {
  double epsilon = 1.35;
  double lambda = 1e-4;
  double tol = 1e-6;
  Index max_iter = 500;
};

struct HuberFit {
  LinearModel model;
  double scale = 1.0;
  double gradient_norm = 0.0;
  Index iterations = 0;
  bool converged = false;
};

/// Objective over theta = (w, b, sigma):
///   sum_i [sigma + sigma H_eps(r_i / sigma)] + lambda ||w||^2
/// with H(z) = z^2 for |z| <= eps and 2 eps |z| - eps^2 otherwise.
double huber_objective(const Matrix& x, const Vector& y, const Vector& theta, double epsilon,
                       double lambda);
Vector huber_gradient(const Matrix& x, const Vector& y, const Vector& theta, double epsilon,
                      double lambda);

/// Joint minimisation over weights, intercept and scale. Converged when the
/// per-sample gradient norm max|grad| / n falls below tol.
HuberFit fit_huber(const Matrix& x, const Vector& y, const HuberParams& params = {});

// ---- SVR -----------------------------------------------------------------

enum class KernelType { linear, rbf };

struct Kernel {
  KernelType type = KernelType::rbf;
  double gamma = -1.0;  // < 0 means 1 / n_features

  double eval(const double* a, const double* b, Index d, double gamma_resolved) const;

  template <class Archive>
  void serialize(Archive& ar) {
    ar(type, gamma);
  }
};

struct SvrParams {
  double c = 1.0;
  double epsilon = 0.1;
  Kernel kernel;
  double tol = 1e-3;
  Index max_iter = 10'000'000;
};

class KernelModel : public Regressor {
 public:
  KernelModel() = default;
  KernelModel(Matrix support, Vector coefficients, double bias, Kernel kernel, double gamma,
              double c, double epsilon);

  Vector predict(const Matrix& x) const override;
  Index n_inputs() const override { return support_.cols(); }
  std::string kind() const override { return "kernel"; }

  const Matrix& support_vectors() const { return support_; }
  const Vector& coefficients() const { return coefficients_; }  // alpha - alpha*
  double bias() const { return bias_; }
  double c() const { return c_; }
  /// Primal weights; only defined for the linear kernel.
  Vector linear_weights() const;

  template <class Archive>
  void serialize(Archive& ar) {
    ar(support_, coefficients_, bias_, kernel_, gamma_, c_, epsilon_);
  }

 private:
  Matrix support_;
  Vector coefficients_;
  double bias_ = 0.0;
  Kernel kernel_;
  double gamma_ = 1.0;
  double c_ = 1.0;
  double epsilon_ = 0.1;
};

struct SvrDual {
  Vector coefficients;  // alpha - alpha*, length n
  double bias = 0.0;
  Index iterations = 0;
  bool converged = false;
};

/// SMO on the epsilon-insensitive dual with second-order working-set
/// selection; stops when the maximal KKT violation drops below tol.
SvrDual solve_svr_dual(const Matrix& gram, const Vector& y, const SvrParams& params);
Matrix kernel_matrix(const Matrix& a, const Matrix& b, const Kernel& kernel, double gamma);
double resolve_gamma(const Kernel& kernel, Index n_features);

KernelModel fit_svr(const Matrix& x, const Vector& y, const SvrParams& params = {});

/// SVR per output column sharing one Gram matrix.
class KernelMultiModel : public MultiRegressor {
 public:
  KernelMultiModel() = default;
  KernelMultiModel(Matrix train, Matrix coefficients, Vector bias, Kernel kernel, double gamma);

  Matrix predict(const Matrix& x) const override;
  Index n_inputs() const override { return train_.cols(); }
  Index n_outputs() const override { return coefficients_.cols(); }
  std::string kind() const override { return "kernel_multi"; }

  template <class Archive>
  void serialize(Archive& ar) {
    ar(train_, coefficients_, bias_, kernel_, gamma_);
  }

 private:
  Matrix train_;
  Matrix coefficients_;
  Vector bias_;
  Kernel kernel_;
  double gamma_ = 1.0;
};

KernelMultiModel fit_svr_multi(const Matrix& x, const Matrix& y, const SvrParams& params = {});

// ---- nearest neighbours --------------------------------------------------

enum class NeighborWeighting { uniform, distance };

/// Stores the training table; prediction averages the k nearest targets.
class NeighborModel : public MultiRegressor {
 public:
  NeighborModel() = default;
  NeighborModel(Matrix train, Matrix targets, Index k, NeighborWeighting weighting);

  Matrix predict(const Matrix& x) const override;
  Index n_inputs() const override { return train_.cols(); }
  Index n_outputs() const override { return targets_.cols(); }
  std::string kind() const override { return "neighbors"; }
  Index k() const { return k_; }

  template <class Archive>
  void serialize(Archive& ar) {
    ar(train_, targets_, k_, weighting_);
  }

 private:
  Matrix train_;
  Matrix targets_;
  Index k_ = 5;
  NeighborWeighting weighting_ = NeighborWeighting::uniform;
};

/// Single-output view of NeighborModel.
class NeighborRegressor : public Regressor {
 public:
  NeighborRegressor() = default;
  explicit NeighborRegressor(NeighborModel model) : model_(std::move(model)) {}

  Vector predict(const Matrix& x) const override { return model_.predict(x).col(0); }
  Index n_inputs() const override { return model_.n_inputs(); }
  std::string kind() const override { return "neighbors"; }

  template <class Archive>
  void serialize(Archive& ar) {
    ar(model_);
  }

 private:
  NeighborModel model_;
};

NeighborModel fit_knn(const Matrix& x, const Matrix& y, Index k,
                      NeighborWeighting weighting = NeighborWeighting::uniform);
Matrix knn_predict(const NeighborModel& model, const Matrix& query);

// ---- k-means -------------------------------------------------------------

struct KMeansResult {
  std::vector<Index> labels;
  Matrix centroids;
  std::vector<double> inertia_trace;  // after each Lloyd iteration
  Index iterations = 0;
};

/// k-means++ seeding followed by Lloyd iterations to a fixed point.
KMeansResult kmeans(const Matrix& x, Index k, std::uint64_t seed, Index max_iter = 300);

}  // namespace connecto::learners
