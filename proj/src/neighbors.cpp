#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "connecto/kernels.hpp"
#include "connecto/learners.hpp"

namespace connecto::learners {

NeighborModel::NeighborModel(Matrix train, Matrix targets, Index k, NeighborWeighting weighting)
    : train_(std::move(train)), targets_(std::move(targets)), k_(k), weighting_(weighting) {
  if (train_.rows() != targets_.rows()) throw ShapeError("inputs and targets disagree on row count");
  if (k_ < 1) throw ParameterError("k must be >= 1");
  if (k_ > train_.rows()) {
    throw ParameterError("k (" + std::to_string(k_) + ") exceeds training rows (" +
                         std::to_string(train_.rows()) + ")");
  }
}

Matrix NeighborModel::predict(const Matrix& x) const {
  if (x.cols() != train_.cols()) throw ShapeError("neighbour model input width mismatch");
  const Matrix dist = kernels::pairwise_sq_distances(x, train_);
  const Index n = train_.rows();
  Matrix out(x.rows(), targets_.cols());
  kernels::parallel_for(x.rows(), [&](Index q) {
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::partial_sort(order.begin(), order.begin() + k_, order.end(), [&](Index a, Index b) {
      return dist(q, a) < dist(q, b) || (dist(q, a) == dist(q, b) && a < b);
    });
    order.resize(static_cast<std::size_t>(k_));
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(targets_.cols());
    if (weighting_ == NeighborWeighting::uniform) {
      for (Index j : order) acc += targets_.row(j);
      out.row(q) = acc / static_cast<double>(k_);
      return;
    }
    // An exact match carries infinite weight: average the exact matches only.
    Index exact = 0;
    for (Index j : order) {
      if (dist(q, j) == 0.0) {
        acc += targets_.row(j);
        ++exact;
      }
    }
    if (exact > 0) {
      out.row(q) = acc / static_cast<double>(exact);
      return;
    }
    double wsum = 0.0;
    for (Index j : order) {
      const double w = 1.0 / std::sqrt(dist(q, j));
      acc += w * targets_.row(j);
      wsum += w;
    }
    out.row(q) = acc / wsum;
  });
  return out;
}

NeighborModel fit_knn(const Matrix& x, const Matrix& y, Index k, NeighborWeighting weighting) {
  if (x.rows() == 0) throw DataError("cannot fit on an empty table");
  return NeighborModel(x, y, k, weighting);
}

Matrix knn_predict(const NeighborModel& model, const Matrix& query) { return model.predict(query); }

namespace {

double assign(const Matrix& x, const Matrix& centroids, std::vector<Index>& labels) {
  const Matrix dist = kernels::pairwise_sq_distances(x, centroids);
  double inertia = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    Index best = 0;
    for (Index c = 1; c < centroids.rows(); ++c) {
      if (dist(i, c) < dist(i, best)) best = c;
    }
    labels[static_cast<std::size_t>(i)] = best;
    inertia += dist(i, best);
  }
  return inertia;
}

}  // namespace

KMeansResult kmeans(const Matrix& x, Index k, std::uint64_t seed, Index max_iter) {
  const Index n = x.rows();
  if (k < 1 || k > n) throw ParameterError("k-means needs 1 <= k <= rows");
  if (max_iter < 1) throw ParameterError("k-means max_iter must be >= 1");
  Rng rng = make_rng(seed, 0);

  // k-means++ seeding.
  std::vector<Index> chosen;
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  std::uniform_int_distribution<Index> first(0, n - 1);
  chosen.push_back(first(rng));
  taken[static_cast<std::size_t>(chosen[0])] = true;
  Vector d2 = kernels::pairwise_sq_distances(x, x.row(chosen[0])).col(0);
  while (static_cast<Index>(chosen.size()) < k) {
    const double total = d2.sum();
    Index next = -1;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      const double target = u(rng);
      double run = 0.0;
      for (Index i = 0; i < n; ++i) {
        run += d2(i);
        if (run >= target && d2(i) > 0.0) {
          next = i;
          break;
        }
      }
      if (next < 0) {
        for (Index i = n - 1; i >= 0; --i) {
          if (d2(i) > 0.0) {
            next = i;
            break;
          }
        }
      }
    } else {
      for (Index i = 0; i < n; ++i) {
        if (!taken[static_cast<std::size_t>(i)]) {
          next = i;
          break;
        }
      }
    }
    chosen.push_back(next);
    taken[static_cast<std::size_t>(next)] = true;
    d2 = d2.cwiseMin(kernels::pairwise_sq_distances(x, x.row(next)).col(0));
  }

  KMeansResult res;
  res.centroids = take_rows(x, chosen);
  res.labels.assign(static_cast<std::size_t>(n), -1);
  std::vector<Index> labels(static_cast<std::size_t>(n), 0);
  for (Index it = 0; it < max_iter; ++it) {
    const double inertia = assign(x, res.centroids, labels);
    res.inertia_trace.push_back(inertia);
    res.iterations = it + 1;
    if (labels == res.labels) break;
    res.labels = labels;
    Matrix sums = Matrix::Zero(k, x.cols());
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (Index c = 0; c < k; ++c) {
      // Empty clusters keep their previous centroid.
      if (counts[static_cast<std::size_t>(c)] > 0) {
        res.centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
  }
  return res;
}

}  // namespace connecto::learners
