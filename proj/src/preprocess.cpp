#include <algorithm>
#include <cmath>
#include <map>

#include "connecto/kernels.hpp"
#include "connecto/preprocess.hpp"

namespace connecto::preprocess {

Index SampleMask::kept() const { return static_cast<Index>(std::count(keep.begin(), keep.end(), true)); }
Index FeatureMask::kept() const { return static_cast<Index>(std::count(keep.begin(), keep.end(), true)); }

Matrix FeatureMask::apply(const Matrix& x) const {
  if (x.cols() != size()) {
    throw ShapeError("feature mask of width " + std::to_string(size()) + " applied to " +
                     std::to_string(x.cols()) + " columns");
  }
  return take_cols(x, kept_columns());
}

Matrix ScalerParams::apply(const Matrix& x) const {
  if (x.cols() != scale.size()) throw ShapeError("scaler width does not match table");
  Matrix out(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    out.col(j) = (x.col(j).array() - mean(j)) / scale(j);
  }
  return out;
}

namespace {

void require_nonempty(const SampleMask& mask, const char* rule) {
  if (mask.kept() == 0) {
    throw DataError(std::string(rule) + " would eliminate every sample");
  }
}

SampleMask mask_from_violations(const std::vector<Index>& violations, Index d,
                                double violation_fraction) {
  SampleMask mask;
  mask.keep.resize(violations.size());
  const double limit = violation_fraction * static_cast<double>(d);
  for (std::size_t i = 0; i < violations.size(); ++i) {
    mask.keep[i] = !(violations[i] > 0 && static_cast<double>(violations[i]) > limit);
  }
  return mask;
}

void check_fraction(double f) {
  if (!(f >= 0.0 && f < 1.0)) throw ParameterError("violation_fraction must lie in [0,1)");
}

}  // namespace

double linear_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InsufficientDataError("quantile of empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ParameterError("quantile level must lie in [0,1]");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

IqrBounds iqr_bounds(const Matrix& x, double multiplier) {
  if (x.rows() < 4) throw InsufficientDataError("IQR rule needs at least 4 rows");
  if (!(multiplier >= 0.0)) throw ParameterError("IQR multiplier must be >= 0");
  IqrBounds b{Vector(x.cols()), Vector(x.cols())};
  kernels::parallel_for(x.cols(), [&](Index j) {
    std::vector<double> col(x.col(j).data(), x.col(j).data() + x.rows());
    const double q1 = linear_quantile(col, 0.25);
    const double q3 = linear_quantile(std::move(col), 0.75);
    const double iqr = q3 - q1;
    b.lower(j) = q1 - multiplier * iqr;
    b.upper(j) = q3 + multiplier * iqr;
  });
  return b;
}

SampleMask iqr_mask(const Matrix& x, double multiplier, double violation_fraction) {
  check_fraction(violation_fraction);
  const auto b = iqr_bounds(x, multiplier);
  std::vector<Index> violations(static_cast<std::size_t>(x.rows()), 0);
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      const double v = x(i, j);
      if (v < b.lower(j) || v > b.upper(j)) ++violations[static_cast<std::size_t>(i)];
    }
  }
  auto mask = mask_from_violations(violations, x.cols(), violation_fraction);
  require_nonempty(mask, "IQR elimination");
  return mask;
}

SampleMask iqr_mask(const FeatureTable& table, double multiplier) {
  return iqr_mask(table.rows(), multiplier);
}

SampleMask zscore_mask(const Matrix& x, double k, double violation_fraction) {
  if (x.rows() < 2) throw InsufficientDataError("z-score rule needs at least 2 rows");
  if (!(k > 0.0)) throw ParameterError("z-score k must be > 0");
  check_fraction(violation_fraction);
  const auto m = kernels::column_moments(x);
  std::vector<Index> violations(static_cast<std::size_t>(x.rows()), 0);
  for (Index j = 0; j < x.cols(); ++j) {
    const double sd = std::sqrt(m.variance(j));
    if (sd == 0.0) continue;  // constant features never trigger
    for (Index i = 0; i < x.rows(); ++i) {
      if (std::abs(x(i, j) - m.mean(j)) > k * sd) ++violations[static_cast<std::size_t>(i)];
    }
  }
  auto mask = mask_from_violations(violations, x.cols(), violation_fraction);
  require_nonempty(mask, "z-score elimination");
  return mask;
}

SampleMask zscore_mask(const FeatureTable& table, double k) { return zscore_mask(table.rows(), k); }

SampleMask threshold_mask(const Vector& scores, double threshold) {
  SampleMask mask;
  mask.keep.resize(static_cast<std::size_t>(scores.size()));
  for (Index i = 0; i < scores.size(); ++i) mask.keep[static_cast<std::size_t>(i)] = scores(i) <= threshold;
  require_nonempty(mask, "score-threshold elimination");
  return mask;
}

FeatureMask drop_constant_features(const Matrix& x) {
  if (x.rows() < 1) throw InsufficientDataError("constant-feature elimination needs a row");
  FeatureMask mask = FeatureMask::all(x.cols());
  // Population variance is exactly zero iff every entry equals the first.
  for (Index j = 0; j < x.cols(); ++j) {
    const double first = x(0, j);
    mask.keep[static_cast<std::size_t>(j)] = (x.col(j).array() != first).any();
  }
  return mask;
}

FeatureMask drop_redundant_features(const Matrix& x) {
  if (x.rows() < 1) throw InsufficientDataError("redundant-feature elimination needs a row");
  FeatureMask mask = FeatureMask::all(x.cols());
  // Bucket columns by a content hash, then compare exactly within a bucket.
  std::map<std::size_t, std::vector<Index>> buckets;
  for (Index j = 0; j < x.cols(); ++j) {
    if ((x.col(j).array() == 0.0).all()) {
      mask.keep[static_cast<std::size_t>(j)] = false;
      continue;
    }
    std::size_t h = 1469598103934665603ULL;
    for (Index i = 0; i < x.rows(); ++i) {
      h ^= std::hash<double>{}(x(i, j) + 0.0);
      h *= 1099511628211ULL;
    }
    auto& bucket = buckets[h];
    bool duplicate = false;
    for (Index earlier : bucket) {
      if (x.col(earlier) == x.col(j)) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) {
      mask.keep[static_cast<std::size_t>(j)] = false;
    } else {
      bucket.push_back(j);
    }
  }
  return mask;
}

FeatureMask drop_correlated_features(const Matrix& x, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ParameterError("correlation threshold must lie in (0, 1]");
  }
  if (x.rows() < 3) throw InsufficientDataError("correlation elimination needs at least 3 rows");
  const auto m = kernels::column_moments(x);
  Matrix z(x.rows(), x.cols());
  std::vector<bool> constant(static_cast<std::size_t>(x.cols()));
  for (Index j = 0; j < x.cols(); ++j) {
    const double sd = std::sqrt(m.variance(j));
    constant[static_cast<std::size_t>(j)] = sd == 0.0;
    if (sd == 0.0) {
      z.col(j).setZero();
    } else {
      z.col(j) = (x.col(j).array() - m.mean(j)) / sd;
    }
  }
  const Matrix corr = (z.transpose() * z) / static_cast<double>(x.rows());
  FeatureMask mask = FeatureMask::all(x.cols());
  std::vector<Index> kept;
  for (Index j = 0; j < x.cols(); ++j) {
    bool drop = false;
    if (!constant[static_cast<std::size_t>(j)]) {
      for (Index k : kept) {
        if (!constant[static_cast<std::size_t>(k)] && std::abs(corr(k, j)) > threshold) {
          drop = true;
          break;
        }
      }
    }
    if (drop) {
      mask.keep[static_cast<std::size_t>(j)] = false;
    } else {
      kept.push_back(j);
    }
  }
  return mask;
}

ScalerParams fit_scaler(const Matrix& x, ScalerMode mode) {
  ScalerParams p;
  p.mode = mode;
  p.mean = Vector::Zero(x.cols());
  p.scale = Vector::Ones(x.cols());
  p.degenerate.assign(static_cast<std::size_t>(x.cols()), false);
  if (mode == ScalerMode::standard) {
    if (x.rows() < 2) throw InsufficientDataError("standard scaler needs at least 2 rows");
    const auto m = kernels::column_moments(x);
    for (Index j = 0; j < x.cols(); ++j) {
      const double sd = std::sqrt(m.variance(j));
      if (sd > 0.0) {
        p.mean(j) = m.mean(j);
        p.scale(j) = sd;
      } else {
        p.degenerate[static_cast<std::size_t>(j)] = true;
      }
    }
  } else {
    if (x.rows() < 1) throw InsufficientDataError("max-abs scaler needs a row");
    for (Index j = 0; j < x.cols(); ++j) {
      const double mx = x.col(j).cwiseAbs().maxCoeff();
      if (mx > 0.0) {
        p.scale(j) = mx;
      } else {
        p.degenerate[static_cast<std::size_t>(j)] = true;
      }
    }
  }
  return p;
}

FeatureTable apply_scaler(const ScalerParams& params, const FeatureTable& table) {
  return FeatureTable(table.subject_ids(), params.apply(table.rows()));
}

Matrix logit_transform(const Matrix& x, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw ParameterError("logit eps must lie in (0, 0.5)");
  Matrix out(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      const double v = x(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw DataError("logit input outside [0,1] at row " + std::to_string(i) + ", column " +
                        std::to_string(j));
      }
      const double c = std::clamp(v, eps, 1.0 - eps);
      out(i, j) = std::log(c / (1.0 - c));
    }
  }
  return out;
}

Matrix sigmoid_transform(const Matrix& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

FeatureTable logit_transform(const FeatureTable& table, double eps) {
  return FeatureTable(table.subject_ids(), logit_transform(table.rows(), eps));
}

FeatureTable sigmoid_transform(const FeatureTable& table) {
  return FeatureTable(table.subject_ids(), sigmoid_transform(table.rows()));
}

LongitudinalDataset augment_noise(const LongitudinalDataset& dataset, double sigma, Index copies,
                                  std::uint64_t seed) {
  if (!dataset.labeled()) throw DataError("noise augmentation needs a labeled dataset");
  if (!(sigma >= 0.0)) throw ParameterError("noise sigma must be >= 0");
  if (copies < 0) throw ParameterError("copies must be >= 0");
  const Index n = dataset.n_subjects();
  const Index d = dataset.t0().n_features();
  Matrix x(n * (1 + copies), d);
  Matrix y(n * (1 + copies), d);
  std::vector<std::string> ids = dataset.t0().subject_ids();
  x.topRows(n) = dataset.t0().rows();
  y.topRows(n) = dataset.targets().rows();
  Rng rng = make_rng(seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index c = 1; c <= copies; ++c) {
    for (Index i = 0; i < n; ++i) {
      const Index r = c * n + i;
      for (Index j = 0; j < d; ++j) x(r, j) = dataset.t0().rows()(i, j) + sigma * normal(rng);
      y.row(r) = dataset.targets().rows().row(i);
      ids.push_back(dataset.t0().subject_ids()[static_cast<std::size_t>(i)] + "#aug" + std::to_string(c));
    }
  }
  return LongitudinalDataset(FeatureTable(ids, std::move(x)), FeatureTable(ids, std::move(y)));
}

}  // namespace connecto::preprocess
