#pragma once

// Metrics, k-fold cross-validation, competition rank tables and paired
// significance tests.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "connecto/common.hpp"
#include "connecto/connectome.hpp"
#include "connecto/pipeline.hpp"

namespace connecto::eval {

// ---- metrics ---------------------------------------------------------------

/// Means over every entry (subjects x features).
double mae(const Matrix& pred, const Matrix& truth);
double mse(const Matrix& pred, const Matrix& truth);
double mae(const FeatureTable& pred, const FeatureTable& truth);
double mse(const FeatureTable& pred, const FeatureTable& truth);

enum class PccMode { flattened, per_subject };

/// Pearson correlation of the flattened tables; 0 with a warning when either
/// side has zero variance. per_subject averages the row-wise correlations.
double pcc(const Matrix& pred, const Matrix& truth, PccMode mode = PccMode::flattened);
double pcc(const FeatureTable& pred, const FeatureTable& truth, PccMode mode = PccMode::flattened);

/// Row-wise MAE and PCC.
Vector per_subject_mae(const Matrix& pred, const Matrix& truth);
Vector per_subject_pcc(const Matrix& pred, const Matrix& truth);

/// |pred - truth| laid out as a brain graph.
ConnectivityMatrix residual_matrix(const Vector& pred, const Vector& truth);

// ---- cross-validation ------------------------------------------------------

enum class SplitKind { public_test, private_test, cv_fold };

struct ScoreRecord {
  std::string name;
  SplitKind split = SplitKind::public_test;
  Index fold = -1;
  double mae = 0.0;
  double mse = 0.0;
  double pcc = 0.0;
};

ScoreRecord score(const std::string& name, SplitKind split, const Matrix& pred, const Matrix& truth,
                  Index fold = -1);

/// Fold id per sample: a seeded shuffle cut into k contiguous folds whose
/// sizes differ by at most one.
std::vector<Index> kfold_split(Index n, Index k, std::uint64_t seed);

struct CvResult {
  std::vector<ScoreRecord> folds;
  double mean_mae = 0.0;
  double mean_mse = 0.0;
  double mean_pcc = 0.0;
  double std_mae = 0.0;  // population std over folds
  double std_mse = 0.0;
  double std_pcc = 0.0;
  Matrix oof_predictions;   // out-of-fold prediction of every training subject
  Vector oof_subject_mae;   // per-subject MAE of those predictions
  Vector oof_subject_pcc;
};

/// Fits on k-1 folds and scores the held-out fold, for every fold.
CvResult cross_validate(const pipeline::PipelineConfig& config, const LongitudinalDataset& dataset,
                        Index k = 5, std::uint64_t seed = 0);

// ---- ranking ---------------------------------------------------------------

/// Competition ranking: tied values share the minimum rank (1, 1, 3, ...).
std::vector<int> min_rank(const std::vector<double>& values, bool ascending);

struct TeamScores {
  std::string team;
  std::optional<double> mae_public, mae_private, mae_cv;
  std::optional<double> pcc_public, pcc_private, pcc_cv;
};

/// Local ranks in column order public, private, cv.
struct MeasureRanks {
  int local[3] = {0, 0, 0};
  int measure = 0;
};

struct RankRow {
  std::string team;
  MeasureRanks mae;
  MeasureRanks pcc;
  int final_rank = 0;
};

enum class Aggregator { mean, product };

/// Ranks every metric column (MAE ascending, PCC descending), then ranks the
/// mean of the three local ranks per measure, then the mean of the two
/// measure ranks. Rows keep the input order. Throws DataError when any
/// score is missing.
std::vector<RankRow> compute_rank_table(const std::vector<TeamScores>& scores,
                                        Aggregator aggregator = Aggregator::mean);

/// The same aggregation starting from given local ranks.
std::vector<RankRow> rank_table_from_local_ranks(const std::vector<std::string>& teams,
                                                 const std::vector<std::array<int, 3>>& mae_local,
                                                 const std::vector<std::array<int, 3>>& pcc_local,
                                                 Aggregator aggregator = Aggregator::mean);

// ---- statistics ------------------------------------------------------------

/// I_x(a, b) by Lentz's continued fraction.
double regularized_incomplete_beta(double a, double b, double x);
double student_t_cdf(double t, double dof);
/// P(|T| >= |t|) for T ~ t(dof).
double student_t_two_tailed(double t, double dof);

struct TTestResult {
  double t = 0.0;
  double dof = 0.0;
  double p = 1.0;
  double mean_difference = 0.0;
};

/// Two-tailed paired t-test; an all-zero difference gives p = 1, a constant
/// nonzero difference gives p = 0.
TTestResult paired_ttest(const Vector& a, const Vector& b);

/// Symmetric p-value matrix with a unit diagonal.
Matrix paired_ttest_matrix(const std::vector<Vector>& errors);

}  // namespace connecto::eval
