#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "connecto/common.hpp"

namespace connecto {

inline constexpr Index kDefaultRois = 35;

/// Number of upper-triangle entries of an n x n matrix.
constexpr Index feature_count(Index n_rois) { return n_rois * (n_rois - 1) / 2; }

/// Inverse of feature_count; throws ShapeError when d is not triangular.
Index rois_for_feature_count(Index d);

/// Row-major upper-triangle position of (i, j), i < j < n.
Index triu_index(Index i, Index j, Index n);

/// Symmetric, nonnegative, zero-diagonal brain graph.
class ConnectivityMatrix {
 public:
  /// Validates every invariant; throws DataError on violation.
  explicit ConnectivityMatrix(Matrix weights);

  static ConnectivityMatrix zeros(Index n_rois);

  Index n_rois() const { return weights_.rows(); }
  const Matrix& weights() const { return weights_; }
  double operator()(Index i, Index j) const { return weights_(i, j); }

  bool operator==(const ConnectivityMatrix& other) const {
    return weights_ == other.weights_;
  }

 private:
  Matrix weights_;
};

/// Upper-triangle vectorization.
Vector vectorize(const ConnectivityMatrix& m);

/// Writes v into both (i,j) and (j,i); the diagonal is zero. Predicted
/// vectors may carry negative values, so only the shape is validated here;
/// use devectorize_unchecked for raw residual or prediction display.
ConnectivityMatrix devectorize(const Vector& v, Index n_rois);
Matrix devectorize_unchecked(const Vector& v, Index n_rois);

/// Subjects x features table with unique subject ids.
class FeatureTable {
 public:
  FeatureTable() = default;
  FeatureTable(std::vector<std::string> subject_ids, Matrix rows);

  Index n_subjects() const { return rows_.rows(); }
  Index n_features() const { return rows_.cols(); }
  const std::vector<std::string>& subject_ids() const { return ids_; }
  const Matrix& rows() const { return rows_; }

  FeatureTable select_rows(const std::vector<Index>& rows) const;

  bool operator==(const FeatureTable& other) const {
    return ids_ == other.ids_ && rows_ == other.rows_;
  }

 private:
  std::vector<std::string> ids_;
  Matrix rows_;
};

/// Baseline table plus optional follow-up table with identical ids.
class LongitudinalDataset {
 public:
  explicit LongitudinalDataset(FeatureTable t0, std::optional<FeatureTable> t1 = std::nullopt);

  const FeatureTable& t0() const { return t0_; }
  const std::optional<FeatureTable>& t1() const { return t1_; }
  bool labeled() const { return t1_.has_value(); }
  const FeatureTable& targets() const;

  Index n_subjects() const { return t0_.n_subjects(); }
  LongitudinalDataset select_rows(const std::vector<Index>& rows) const;

 private:
  FeatureTable t0_;
  std::optional<FeatureTable> t1_;
};

/// Reads `ID,f0,...,f{d-1}`. Pass expect_d < 0 to accept any width.
FeatureTable load_csv(const std::filesystem::path& path, Index expect_d = -1);
FeatureTable parse_csv(const std::string& text, Index expect_d = -1,
                       const std::string& source_name = "<memory>");

/// Emits the same schema with LF line endings and shortest round-trip
/// decimals.
void write_csv(const std::filesystem::path& path, const FeatureTable& table);
std::string format_csv(const FeatureTable& table);

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

struct SyntheticParams {
  Index n_subjects = 150;
  Index n_rois = kDefaultRois;
  double drift = 0.1;
  double noise_sigma = 0.02;
  std::uint64_t seed = 0;
  std::string id_prefix = "S";
};

/// t0 ~ U[0,1] per edge, t1 = clip(t0 (1 - drift) + N(0, sigma), 0, 1).
LongitudinalDataset generate_synthetic(const SyntheticParams& params);

}  // namespace connecto
