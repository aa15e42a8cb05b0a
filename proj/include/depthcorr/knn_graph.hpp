#pragma once

// Directed KNN graph over a point cloud and the depth-reconstruction
// weights on its edges.
//
// For each point i with neighbours N_i, the weights w_i solve
//
//   minimize |w_i|^2   s.t.   w_i . Z[N_i] = Z_i,   sum(w_i) = 1,
//
// i.e. the minimum-norm affine combination of the neighbour depths that
// reproduces the point's own depth. Rows are independent.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "depthcorr/geometry.hpp"
#include "depthcorr/kdtree.hpp"

namespace depthcorr {

struct NeighborLists {
  std::size_t n_points = 0;
  std::size_t k = 0;
  // Row-major n_points x k, nearest first.
  std::vector<std::uint32_t> indices;
  // Set when the requested k had to be reduced to n_points - 1.
  bool k_clamped = false;

  std::span<const std::uint32_t> row(std::size_t i) const {
    return {indices.data() + i * k, k};
  }
};

inline std::vector<Vec3> cloud_coordinates(const PointCloud& cloud) {
  std::vector<Vec3> xyz(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) xyz[i] = {cloud[i].x, cloud[i].y, cloud[i].z};
  return xyz;
}

// k nearest other points of every point by 3-D Euclidean distance; equal
// distances resolve to the lower index.
inline NeighborLists build_knn(const PointCloud& cloud, std::size_t k) {
  if (cloud.size() < 2) throw std::invalid_argument("build_knn: need at least 2 points");
  if (k < 1) throw std::invalid_argument("build_knn: k must be >= 1");
  NeighborLists out;
  out.n_points = cloud.size();
  if (k >= cloud.size()) {
    k = cloud.size() - 1;
    out.k_clamped = true;
  }
  out.k = k;
  out.indices.resize(out.n_points * k);
  const KdTree tree(cloud_coordinates(cloud));
  for (std::size_t i = 0; i < out.n_points; ++i) {
    const auto nn = tree.knn(tree.point(i), k, i);
    for (std::size_t j = 0; j < k; ++j) out.indices[i * k + j] = nn[j].index;
  }
  return out;
}

struct WeightOptions {
  // Relative regulariser: neighbourhoods whose depth variance is at most
  // lambda * mean(z^2) are treated as single-depth and get uniform weights.
  double lambda = 1e-6;
};

struct KnnWeights {
  std::size_t n_points = 0;
  std::size_t k = 0;
  std::vector<std::uint32_t> neighbors;  // n_points x k
  std::vector<double> weights;           // n_points x k
  // Rows whose neighbours all share one depth that differs from the
  // point's own; these fall back to uniform weights and cannot reconstruct.
  std::vector<std::uint32_t> degenerate_rows;

  std::span<const std::uint32_t> row_neighbors(std::size_t i) const {
    return {neighbors.data() + i * k, k};
  }
  std::span<const double> row_weights(std::size_t i) const {
    return {weights.data() + i * k, k};
  }

  // (W z)_i for every row.
  std::vector<double> apply(std::span<const double> z) const {
    std::vector<double> out(n_points, 0.0);
    for (std::size_t i = 0; i < n_points; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += weights[i * k + j] * z[neighbors[i * k + j]];
      out[i] = s;
    }
    return out;
  }
};

namespace detail {

struct RowSolve {
  bool degenerate = false;
};

// Closed form of the (k+2) saddle-point system via its 2x2 Schur
// complement. With A = [z^T; 1^T] the optimum is w = A^T (A A^T)^-1 b;
// centring z makes the Gram diagonal, giving
//   w_j = 1/k + c_j (Z_i - mean) / sum(c^2),   c = z - mean.
inline RowSolve solve_row(double zi, std::span<const double> z, double lambda,
                          std::span<double> w) {
  const std::size_t k = z.size();
  const double kd = static_cast<double>(k);
  double mean = 0.0;
  double mean_sq = 0.0;
  for (double x : z) {
    mean += x;
    mean_sq += x * x;
  }
  mean /= kd;
  mean_sq /= kd;
  double css = 0.0;
  for (double x : z) css += (x - mean) * (x - mean);

  if (k < 2 || css <= lambda * kd * mean_sq) {
    // The two constraints collapse into one: uniform weights are the
    // minimum-norm answer when it is consistent with Z_i.
    std::fill(w.begin(), w.end(), 1.0 / kd);
    const double scale = std::max(std::abs(zi), 1.0);
    return {std::abs(zi - mean) > 1e-9 * scale};
  }
  const double gain = (zi - mean) / css;
  for (std::size_t j = 0; j < k; ++j) w[j] = 1.0 / kd + (z[j] - mean) * gain;
  return {};
}

}  // namespace detail

// Reconstruction weights from per-point depths (stereo depths only; LiDAR
// is not consulted here).
inline KnnWeights solve_weights(std::span<const double> depths, const NeighborLists& nbrs,
                                const WeightOptions& opts = {}) {
  if (depths.size() != nbrs.n_points) {
    throw std::invalid_argument("solve_weights: depth count does not match the graph");
  }
  if (nbrs.k < 1) throw std::invalid_argument("solve_weights: empty neighbourhoods");
  KnnWeights out;
  out.n_points = nbrs.n_points;
  out.k = nbrs.k;
  out.neighbors = nbrs.indices;
  out.weights.resize(out.n_points * out.k);
  std::vector<double> zn(out.k);
  for (std::size_t i = 0; i < out.n_points; ++i) {
    const auto row = nbrs.row(i);
    for (std::size_t j = 0; j < out.k; ++j) zn[j] = depths[row[j]];
    const auto r = detail::solve_row(depths[i], zn, opts.lambda,
                                     std::span<double>(out.weights.data() + i * out.k, out.k));
    if (r.degenerate) out.degenerate_rows.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

inline KnnWeights solve_weights(const PointCloud& cloud, const NeighborLists& nbrs,
                                const WeightOptions& opts = {}) {
  std::vector<double> z(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) z[i] = cloud[i].z;
  return solve_weights(z, nbrs, opts);
}

// One "row col weight" line per stored entry.
inline void write_weight_triplets(std::ostream& out, const KnnWeights& w) {
  out.precision(17);
  for (std::size_t i = 0; i < w.n_points; ++i) {
    for (std::size_t j = 0; j < w.k; ++j) {
      out << i << ' ' << w.neighbors[i * w.k + j] << ' ' << w.weights[i * w.k + j] << '\n';
    }
  }
}

}  // namespace depthcorr
