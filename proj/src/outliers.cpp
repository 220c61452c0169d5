#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "connecto/kernels.hpp"
#include "connecto/preprocess.hpp"

namespace connecto::preprocess {

namespace {

constexpr double kLrdEpsilon = 1e-10;

// k nearest neighbours of row i (self excluded), ties broken by row index.
std::vector<Index> nearest(const Matrix& dist, Index i, Index k) {
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(dist.cols() - 1));
  for (Index j = 0; j < dist.cols(); ++j) {
    if (j != i) order.push_back(j);
  }
  std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Index a, Index b) {
    return dist(i, a) < dist(i, b) || (dist(i, a) == dist(i, b) && a < b);
  });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

}  // namespace

Vector lof_scores(const Matrix& x, Index k) {
  const Index n = x.rows();
  if (k < 1) throw ParameterError("LOF needs k_neighbors >= 1");
  if (n <= k) {
    throw InsufficientDataError("LOF needs more rows (" + std::to_string(n) + ") than k_neighbors (" +
                                std::to_string(k) + ")");
  }
  Matrix dist = kernels::pairwise_sq_distances(x, x).cwiseSqrt();
  std::vector<std::vector<Index>> neighbors(static_cast<std::size_t>(n));
  Vector k_distance(n);
  kernels::parallel_for(n, [&](Index i) {
    neighbors[static_cast<std::size_t>(i)] = nearest(dist, i, k);
    k_distance(i) = dist(i, neighbors[static_cast<std::size_t>(i)].back());
  });
  Vector lrd(n);
  for (Index i = 0; i < n; ++i) {
    double reach = 0.0;
    for (Index j : neighbors[static_cast<std::size_t>(i)]) reach += std::max(k_distance(j), dist(i, j));
    lrd(i) = 1.0 / (reach / static_cast<double>(k) + kLrdEpsilon);
  }
  Vector scores(n);
  for (Index i = 0; i < n; ++i) {
    double ratio = 0.0;
    for (Index j : neighbors[static_cast<std::size_t>(i)]) ratio += lrd(j);
    scores(i) = ratio / static_cast<double>(k) / lrd(i);
  }
  return scores;
}

Vector lof_scores(const FeatureTable& table, Index k) { return lof_scores(table.rows(), k); }

double average_path_length(Index n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  const double m = static_cast<double>(n);
  const double harmonic = std::log(m - 1.0) + std::numbers::egamma;
  return 2.0 * harmonic - 2.0 * (m - 1.0) / m;
}

namespace {

// Internal nodes have feature >= 0; leaves keep the subsample size that
// reached them for the c(size) path adjustment.
struct IsolationNode {
  Index feature = -1;
  double threshold = 0.0;
  Index left = -1;
  Index right = -1;
  Index size = 0;
};

class IsolationTree {
 public:
  IsolationTree(const Matrix& x, std::vector<Index> rows, Index height_limit, Rng& rng) {
    nodes_.reserve(2 * rows.size());
    build(x, rows, 0, height_limit, rng);
  }

  double path_length(const Eigen::Ref<const Eigen::RowVectorXd>& q) const {
    Index node = 0;
    double depth = 0.0;
    while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
      const auto& nd = nodes_[static_cast<std::size_t>(node)];
      node = q(nd.feature) < nd.threshold ? nd.left : nd.right;
      depth += 1.0;
    }
    return depth + average_path_length(nodes_[static_cast<std::size_t>(node)].size);
  }

 private:
  Index build(const Matrix& x, const std::vector<Index>& rows, Index depth, Index limit, Rng& rng) {
    const Index id = static_cast<Index>(nodes_.size());
    nodes_.push_back({});
    nodes_[static_cast<std::size_t>(id)].size = static_cast<Index>(rows.size());
    if (depth >= limit || rows.size() <= 1) return id;

    std::vector<Index> candidates;
    for (Index j = 0; j < x.cols(); ++j) {
      double lo = x(rows[0], j);
      double hi = lo;
      for (Index r : rows) {
        lo = std::min(lo, x(r, j));
        hi = std::max(hi, x(r, j));
      }
      if (hi > lo) candidates.push_back(j);
    }
    if (candidates.empty()) return id;
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    const Index feature = candidates[pick(rng)];
    double lo = x(rows[0], feature);
    double hi = lo;
    for (Index r : rows) {
      lo = std::min(lo, x(r, feature));
      hi = std::max(hi, x(r, feature));
    }
    std::uniform_real_distribution<double> split(lo, hi);
    double threshold = split(rng);
    if (threshold <= lo) threshold = std::nextafter(lo, hi);
    std::vector<Index> left;
    std::vector<Index> right;
    for (Index r : rows) (x(r, feature) < threshold ? left : right).push_back(r);

    const Index l = build(x, left, depth + 1, limit, rng);
    const Index rgt = build(x, right, depth + 1, limit, rng);
    auto& nd = nodes_[static_cast<std::size_t>(id)];
    nd.feature = feature;
    nd.threshold = threshold;
    nd.left = l;
    nd.right = rgt;
    return id;
  }

  std::vector<IsolationNode> nodes_;
};

}  // namespace

Vector iforest_scores(const Matrix& x, const IforestParams& p) {
  const Index n = x.rows();
  if (n < 2) throw InsufficientDataError("isolation forest needs at least 2 rows");
  if (p.n_trees < 1) throw ParameterError("isolation forest needs n_trees >= 1");
  if (p.subsample < 1) throw ParameterError("isolation forest subsample must be >= 1");
  const Index psi = std::min(p.subsample, n);
  const Index height = static_cast<Index>(std::ceil(std::log2(static_cast<double>(std::max<Index>(psi, 2)))));
  const double norm = average_path_length(psi);

  Matrix depths(p.n_trees, n);
  kernels::parallel_for(p.n_trees, [&](Index t) {
    Rng rng = make_rng(p.seed, static_cast<std::uint64_t>(t));
    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(static_cast<std::size_t>(psi));
    std::sort(all.begin(), all.end());
    IsolationTree tree(x, all, height, rng);
    for (Index i = 0; i < n; ++i) depths(t, i) = tree.path_length(x.row(i));
  });
  Vector scores(n);
  for (Index i = 0; i < n; ++i) {
    const double mean_depth = depths.col(i).sum() / static_cast<double>(p.n_trees);
    // psi == 1 admits no split; every point is equally (un)isolated.
    scores(i) = norm > 0.0 ? std::pow(2.0, -mean_depth / norm) : 0.5;
  }
  return scores;
}

Vector iforest_scores(const FeatureTable& table, const IforestParams& params) {
  return iforest_scores(table.rows(), params);
}

namespace {

// Mean squared leave-one-out residual of centred ridge regression over the
// given rows, via the dual hat matrix H = K (K + lambda I)^-1 + 11'/n.
double loo_ridge_error(const Matrix& x, const Vector& y, const std::vector<Index>& rows, double lambda) {
  const Index m = static_cast<Index>(rows.size());
  if (m < 3) return std::numeric_limits<double>::infinity();
  Matrix xs = take_rows(x, rows);
  Vector ys = take_rows(y, rows);
  xs.rowwise() -= xs.colwise().mean();
  const double ymean = ys.mean();
  ys.array() -= ymean;
  const Matrix k = xs * xs.transpose();
  Matrix reg = k;
  reg.diagonal().array() += lambda;
  const Eigen::LDLT<Matrix> ldlt(reg);
  const Matrix hat = k * ldlt.solve(Matrix::Identity(m, m));
  const Vector fitted = hat * ys;
  double err = 0.0;
  for (Index i = 0; i < m; ++i) {
    const double h = hat(i, i) + 1.0 / static_cast<double>(m);
    const double denom = std::max(1.0 - h, 1e-12);
    const double r = (ys(i) - fitted(i)) / denom;
    err += r * r;
  }
  return err / static_cast<double>(m);
}

}  // namespace

SampleMask loo_search_mask(const Matrix& x, const Vector& y, double ridge_lambda, double min_gain) {
  if (x.rows() != y.size()) throw ShapeError("leave-one-out search needs one target per row");
  if (x.rows() < 4) throw InsufficientDataError("leave-one-out search needs at least 4 rows");
  if (!(ridge_lambda > 0.0)) throw ParameterError("ridge_lambda must be > 0");
  if (!(min_gain >= 0.0)) throw ParameterError("min_gain must be >= 0");
  SampleMask mask;
  mask.keep.assign(static_cast<std::size_t>(x.rows()), true);
  double baseline = loo_ridge_error(x, y, mask.kept_rows(), ridge_lambda);
  for (Index i = 0; i < x.rows(); ++i) {
    mask.keep[static_cast<std::size_t>(i)] = false;
    const double without = loo_ridge_error(x, y, mask.kept_rows(), ridge_lambda);
    if (without < baseline * (1.0 - min_gain)) {
      baseline = without;
    } else {
      mask.keep[static_cast<std::size_t>(i)] = true;
    }
  }
  return mask;
}

}  // namespace connecto::preprocess
