#include <algorithm>
#include <cmath>
#include <numeric>

#include "connecto/ensemble.hpp"

namespace connecto::ensemble {

RegressionTree::RegressionTree(std::vector<TreeNode> nodes, Index n_inputs)
    : nodes_(std::move(nodes)), n_inputs_(n_inputs) {
  if (nodes_.empty()) throw ShapeError("a tree needs at least one node");
}

Index RegressionTree::leaf_of(const double* row) const {
  Index node = 0;
  while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
    const auto& nd = nodes_[static_cast<std::size_t>(node)];
    node = row[nd.feature] < nd.threshold ? nd.left : nd.right;
  }
  return node;
}

double RegressionTree::predict_row(const double* row) const {
  return nodes_[static_cast<std::size_t>(leaf_of(row))].value;
}

Vector RegressionTree::predict(const Matrix& x) const {
  if (x.cols() != n_inputs_) throw ShapeError("tree input width mismatch");
  // Row-major copy so each query walks contiguous memory.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = x;
  Vector out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) out(i) = predict_row(rows.row(i).data());
  return out;
}

Index RegressionTree::depth() const {
  std::vector<Index> depth(nodes_.size(), 0);
  Index deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& nd = nodes_[i];
    if (nd.feature >= 0) {
      depth[static_cast<std::size_t>(nd.left)] = depth[i] + 1;
      depth[static_cast<std::size_t>(nd.right)] = depth[i] + 1;
    }
    deepest = std::max(deepest, depth[i]);
  }
  return deepest;
}

Index RegressionTree::leaf_count() const {
  return std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.feature < 0; });
}

namespace {

struct Split {
  Index feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const Vector& y, const TreeParams& p, std::uint64_t seed)
      : x_(x), y_(y), p_(p), rng_(make_rng(seed, 0)) {
    const Index d = x.cols();
    n_candidates_ = std::clamp<Index>(static_cast<Index>(std::ceil(p.feature_fraction * static_cast<double>(d))), 1, d);
  }

  std::vector<TreeNode> build(std::vector<Index> rows) {
    grow(rows, 0);
    return std::move(nodes_);
  }

 private:
  double leaf_value(const std::vector<Index>& rows) const {
    double s = 0.0;
    for (Index r : rows) s += y_(r);
    return s / (static_cast<double>(rows.size()) + p_.l2_leaf);
  }

  std::vector<Index> candidates() {
    const Index d = x_.cols();
    std::vector<Index> feats(static_cast<std::size_t>(d));
    std::iota(feats.begin(), feats.end(), Index{0});
    if (n_candidates_ < d) {
      for (Index i = 0; i < n_candidates_; ++i) {
        std::uniform_int_distribution<Index> pick(i, d - 1);
        std::swap(feats[static_cast<std::size_t>(i)], feats[static_cast<std::size_t>(pick(rng_))]);
      }
      feats.resize(static_cast<std::size_t>(n_candidates_));
      std::sort(feats.begin(), feats.end());
    }
    return feats;
  }

  // Score of a child with target sum s over n rows.
  double score(double s, double n) const { return s * s / (n + p_.l2_leaf); }

  Split best_split(const std::vector<Index>& rows, const std::vector<double>& t, double total) {
    const Index m = static_cast<Index>(rows.size());
    const double md = static_cast<double>(m);
    const Index msl = p_.min_samples_leaf;
    const double parent = score(total, md);
    Split best;
    std::vector<std::pair<double, double>> col(static_cast<std::size_t>(m));
    for (Index f : candidates()) {
      for (Index i = 0; i < m; ++i) {
        col[static_cast<std::size_t>(i)] = {x_(rows[static_cast<std::size_t>(i)], f), t[static_cast<std::size_t>(i)]};
      }
      if (p_.splitter == Splitter::best) {
        std::stable_sort(col.begin(), col.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        double sl = 0.0;
        for (Index i = 1; i < m; ++i) {
          sl += col[static_cast<std::size_t>(i - 1)].second;
          const double a = col[static_cast<std::size_t>(i - 1)].first;
          const double b = col[static_cast<std::size_t>(i)].first;
          if (!(a < b) || i < msl || m - i < msl) continue;
          const double gain = score(sl, static_cast<double>(i)) + score(total - sl, static_cast<double>(m - i)) - parent;
          if (gain > best.gain) {
            double thr = a + (b - a) / 2.0;
            if (!(thr > a)) thr = b;
            best = {f, thr, gain};
          }
        }
      } else {
        double lo = col[0].first;
        double hi = lo;
        for (const auto& c : col) {
          lo = std::min(lo, c.first);
          hi = std::max(hi, c.first);
        }
        if (!(hi > lo)) continue;
        std::uniform_real_distribution<double> u(lo, hi);
        double thr = u(rng_);
        if (!(thr > lo)) thr = std::nextafter(lo, hi);
        double sl = 0.0;
        Index nl = 0;
        for (const auto& c : col) {
          if (c.first < thr) {
            sl += c.second;
            ++nl;
          }
        }
        if (nl < msl || m - nl < msl) continue;
        const double gain = score(sl, static_cast<double>(nl)) + score(total - sl, static_cast<double>(m - nl)) - parent;
        if (gain > best.gain) best = {f, thr, gain};
      }
    }
    return best;
  }

  Index grow(const std::vector<Index>& rows, Index depth) {
    const Index id = static_cast<Index>(nodes_.size());
    nodes_.push_back({});
    nodes_[static_cast<std::size_t>(id)].value = leaf_value(rows);
    const Index m = static_cast<Index>(rows.size());
    if ((p_.max_depth >= 0 && depth >= p_.max_depth) || m < 2 * p_.min_samples_leaf) return id;

    double lo = y_(rows[0]);
    double hi = lo;
    double mean = 0.0;
    for (Index r : rows) {
      lo = std::min(lo, y_(r));
      hi = std::max(hi, y_(r));
      mean += y_(r);
    }
    if (!(hi > lo)) return id;
    mean /= static_cast<double>(m);
    // Without leaf regularisation the gain is shift invariant; centring keeps
    // the prefix sums well conditioned.
    const double shift = p_.l2_leaf == 0.0 ? mean : 0.0;
    std::vector<double> t(static_cast<std::size_t>(m));
    double total = 0.0;
    for (Index i = 0; i < m; ++i) {
      t[static_cast<std::size_t>(i)] = y_(rows[static_cast<std::size_t>(i)]) - shift;
      total += t[static_cast<std::size_t>(i)];
    }
    const Split s = best_split(rows, t, total);
    if (s.feature < 0 || !(s.gain > 0.0)) return id;

    std::vector<Index> left;
    std::vector<Index> right;
    for (Index r : rows) (x_(r, s.feature) < s.threshold ? left : right).push_back(r);
    const Index l = grow(left, depth + 1);
    const Index rgt = grow(right, depth + 1);
    auto& nd = nodes_[static_cast<std::size_t>(id)];
    nd.feature = s.feature;
    nd.threshold = s.threshold;
    nd.left = l;
    nd.right = rgt;
    return id;
  }

  const Matrix& x_;
  const Vector& y_;
  TreeParams p_;
  Rng rng_;
  Index n_candidates_ = 1;
  std::vector<TreeNode> nodes_;
};

}  // namespace

RegressionTree fit_tree(const Matrix& x, const Vector& y, const TreeParams& p, std::uint64_t seed) {
  if (x.rows() == 0) throw DataError("cannot fit on an empty table");
  if (x.rows() != y.size()) throw ShapeError("inputs and targets disagree on row count");
  if (p.min_samples_leaf < 1) throw ParameterError("min_samples_leaf must be >= 1");
  if (!(p.feature_fraction > 0.0 && p.feature_fraction <= 1.0)) {
    throw ParameterError("feature_fraction must lie in (0, 1]");
  }
  if (!(p.l2_leaf >= 0.0)) throw ParameterError("l2_leaf must be >= 0");
  std::vector<Index> rows(static_cast<std::size_t>(x.rows()));
  std::iota(rows.begin(), rows.end(), Index{0});
  TreeBuilder builder(x, y, p, seed);
  return RegressionTree(builder.build(std::move(rows)), x.cols());
}

}  // namespace connecto::ensemble
