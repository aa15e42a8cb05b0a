#pragma once

// Graph-based depth correction: pin a few exact LiDAR depths ("landmarks")
// on the stereo point cloud and diffuse the change through the KNN
// reconstruction weights.
//
// With A = I - W and the landmark columns fixed at G, the free depths x
// solve the least-squares problem
//
//   minimize |A [G; x]|^2 = |A_free x + A_fixed G|^2,
//
// which CGLS handles without forming the normal equations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "depthcorr/geometry.hpp"
#include "depthcorr/knn_graph.hpp"
#include "depthcorr/lidar_sim.hpp"

namespace depthcorr {

// Compressed sparse row matrix.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_start;  // rows + 1 entries
  std::vector<std::uint32_t> col;
  std::vector<double> val;

  // y = M x
  void multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < rows; ++i) {
      double s = 0.0;
      for (std::size_t e = row_start[i]; e < row_start[i + 1]; ++e) s += val[e] * x[col[e]];
      y[i] = s;
    }
  }

  SparseMatrix transposed() const {
    SparseMatrix t;
    t.rows = cols;
    t.cols = rows;
    t.row_start.assign(cols + 1, 0);
    for (auto c : col) ++t.row_start[c + 1];
    for (std::size_t i = 0; i < cols; ++i) t.row_start[i + 1] += t.row_start[i];
    t.col.resize(col.size());
    t.val.resize(val.size());
    std::vector<std::size_t> fill(t.row_start.begin(), t.row_start.end() - 1);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t e = row_start[i]; e < row_start[i + 1]; ++e) {
        const std::size_t dst = fill[col[e]]++;
        t.col[dst] = static_cast<std::uint32_t>(i);
        t.val[dst] = val[e];
      }
    }
    return t;
  }
};

// I - W as a sparse matrix.
inline SparseMatrix identity_minus(const KnnWeights& w) {
  SparseMatrix a;
  a.rows = a.cols = w.n_points;
  a.row_start.resize(w.n_points + 1);
  a.col.reserve(w.n_points * (w.k + 1));
  a.val.reserve(w.n_points * (w.k + 1));
  for (std::size_t i = 0; i < w.n_points; ++i) {
    a.row_start[i] = a.col.size();
    a.col.push_back(static_cast<std::uint32_t>(i));
    a.val.push_back(1.0);
    for (std::size_t j = 0; j < w.k; ++j) {
      a.col.push_back(w.neighbors[i * w.k + j]);
      a.val.push_back(-w.weights[i * w.k + j]);
    }
  }
  a.row_start[w.n_points] = a.col.size();
  return a;
}

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Row-major index of every valid pixel's back-projected point, -1 elsewhere.
// Matches the ordering produced by backproject().
inline Grid<std::int32_t> point_index_map(const DepthMap& depth) {
  Grid<std::int32_t> idx(depth.width(), depth.height(), -1);
  std::int32_t next = 0;
  for (std::size_t i = 0; i < depth.pixel_count(); ++i) {
    if (depth.mask()[i]) idx.data()[i] = next++;
  }
  return idx;
}

struct LandmarkMatch {
  Pixel pixel;
  std::uint32_t point_index = 0;  // index into the stereo point cloud
  double depth = 0.0;             // LiDAR depth G
};

struct LandmarkSet {
  std::vector<LandmarkMatch> matches;  // ascending point_index, one per pixel
  std::size_t n_points = 0;            // size of the stereo cloud
  std::size_t dropped_outside = 0;
  std::size_t dropped_behind = 0;
  std::size_t dropped_invalid_pixel = 0;
  std::size_t dropped_occluded = 0;  // lost to a nearer return on the same pixel

  std::size_t n() const noexcept { return matches.size(); }
  std::size_t m() const noexcept { return n_points - matches.size(); }
  bool empty() const noexcept { return matches.empty(); }
};

// Projects camera-frame LiDAR points to their nearest pixel. Returns off
// the image or on pixels without stereo depth are dropped; when several
// land on one pixel the nearest surface wins.
inline LandmarkSet match_landmarks(const PointCloud& lidar_cam, const DepthMap& depth,
                                   const CameraCalib& calib) {
  const auto proj = project(lidar_cam, calib, depth.width(), depth.height());
  const auto index = point_index_map(depth);
  LandmarkSet out;
  out.n_points = depth.valid_count();
  out.dropped_outside = proj.dropped_outside;
  out.dropped_behind = proj.dropped_behind;
  std::map<std::uint32_t, LandmarkMatch> by_point;
  for (const auto& p : proj.points) {
    const auto u = static_cast<std::size_t>(std::lround(p.u));
    const auto v = static_cast<std::size_t>(std::lround(p.v));
    const std::int32_t pi = index(u, v);
    if (pi < 0) {
      ++out.dropped_invalid_pixel;
      continue;
    }
    const auto key = static_cast<std::uint32_t>(pi);
    auto [it, inserted] = by_point.try_emplace(
        key, LandmarkMatch{Pixel{static_cast<int>(u), static_cast<int>(v)}, key, p.z});
    if (!inserted) {
      ++out.dropped_occluded;
      it->second.depth = std::min(it->second.depth, p.z);
    }
  }
  out.matches.reserve(by_point.size());
  for (const auto& [key, match] : by_point) out.matches.push_back(match);
  return out;
}

struct SolveOptions {
  double tol = 1e-8;
  std::size_t max_iter = 0;  // 0 = 10 * number of free points
};

struct CorrectedDepth {
  std::vector<double> depths;        // per stereo point, original order
  std::vector<std::uint8_t> landmark;  // per stereo point
  DepthMap depth_map;                // corrected depths written back to pixels
  double residual = 0.0;             // |(I - W) Z'|
  double initial_residual = 0.0;     // same for the warm start [G; Z_free]
  std::size_t iterations = 0;
  bool converged = false;
};

// Solves for the free depths with the landmarks held at G exactly. CGLS
// starts from the uncorrected stereo depths and stops once the
// normal-equation residual A_free^T r has shrunk by tol relative to the
// warm start, or |r| <= tol * |b| with b = -A_fixed G.
inline CorrectedDepth correct(const DepthMap& depth, const KnnWeights& weights,
                              const LandmarkSet& landmarks, const SolveOptions& opts = {}) {
  const std::size_t n_pts = depth.valid_count();
  if (weights.n_points != n_pts || landmarks.n_points != n_pts) {
    throw std::invalid_argument("correct: weights/landmarks built for a different point set");
  }
  CorrectedDepth out;
  out.depths.reserve(n_pts);
  for (std::size_t i = 0; i < depth.pixel_count(); ++i) {
    if (depth.mask()[i]) out.depths.push_back(depth.values()[i]);
  }
  out.landmark.assign(n_pts, 0);
  for (const auto& lm : landmarks.matches) {
    out.depths[lm.point_index] = lm.depth;
    out.landmark[lm.point_index] = 1;
  }

  const SparseMatrix a = identity_minus(weights);
  const SparseMatrix at = a.transposed();
  std::vector<double>& x = out.depths;
  auto mask_fixed = [&](std::vector<double>& v) {
    for (std::size_t i = 0; i < n_pts; ++i) {
      if (out.landmark[i]) v[i] = 0.0;
    }
  };

  // b = -A_fixed G
  std::vector<double> fixed_only(n_pts, 0.0);
  for (const auto& lm : landmarks.matches) fixed_only[lm.point_index] = lm.depth;
  std::vector<double> b(n_pts);
  a.multiply(fixed_only, b);
  for (auto& e : b) e = -e;
  const double res_ref = norm2(b);

  std::vector<double> r(n_pts);
  a.multiply(x, r);
  for (auto& e : r) e = -e;
  out.initial_residual = norm2(r);

  const std::size_t n_free = landmarks.m();
  const std::size_t max_iter = opts.max_iter > 0 ? opts.max_iter : 10 * std::max<std::size_t>(n_free, 1);

  std::vector<double> s(n_pts);
  at.multiply(r, s);
  mask_fixed(s);
  std::vector<double> p = s;
  std::vector<double> q(n_pts);
  double gamma = 0.0;
  for (double e : s) gamma += e * e;
  const double grad_ref = std::sqrt(gamma);
  // Below this the gradient is round-off; a warm start that is already
  // optimal must not spin until max_iter.
  std::vector<double> atb(n_pts);
  at.multiply(b, atb);
  mask_fixed(atb);
  const double grad_floor = 1e-14 * norm2(atb);

  auto done = [&](double grad_norm, double res_norm) {
    return n_free == 0 || grad_norm <= opts.tol * grad_ref || grad_norm <= grad_floor ||
           res_norm <= opts.tol * res_ref;
  };

  std::size_t it = 0;
  bool converged = done(std::sqrt(gamma), out.initial_residual);
  while (!converged && it < max_iter) {
    a.multiply(p, q);
    double delta = 0.0;
    for (double e : q) delta += e * e;
    if (!(delta > 0.0)) break;
    const double alpha = gamma / delta;
    for (std::size_t i = 0; i < n_pts; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    at.multiply(r, s);
    mask_fixed(s);
    double gamma_next = 0.0;
    for (double e : s) gamma_next += e * e;
    const double beta = gamma_next / gamma;
    gamma = gamma_next;
    for (std::size_t i = 0; i < n_pts; ++i) p[i] = s[i] + beta * p[i];
    ++it;
    converged = done(std::sqrt(gamma), norm2(r));
  }
  // Landmarks were never touched by the updates (p is zero there), but
  // restore them bit-for-bit anyway.
  for (const auto& lm : landmarks.matches) x[lm.point_index] = lm.depth;

  a.multiply(x, r);
  out.residual = norm2(r);
  out.iterations = it;
  out.converged = converged;

  out.depth_map = DepthMap(depth.width(), depth.height());
  std::size_t k = 0;
  for (std::size_t i = 0; i < depth.pixel_count(); ++i) {
    if (!depth.mask()[i]) continue;
    const double z = x[k++];
    // A correction can in principle push a point through the camera.
    if (z > 0.0) {
      out.depth_map.values()[i] = z;
      out.depth_map.mask()[i] = 1;
    }
  }
  return out;
}

struct GdcOptions {
  std::size_t k = 10;
  WeightOptions weights;
  SolveOptions solve;
};

struct GdcStats {
  std::size_t scan_points = 0;
  std::size_t sparse_points = 0;
  std::size_t camera_points = 0;   // in front of the camera
  std::size_t stereo_points = 0;   // valid stereo pixels
  std::size_t degenerate_rows = 0;
  std::size_t landmarks = 0;
  bool k_clamped = false;
};

struct GdcResult {
  CorrectedDepth corrected;
  GdcStats stats;
  bool applied = false;  // false when no LiDAR return matched a stereo pixel
};

// sparsify -> LiDAR to camera -> back-project -> KNN -> weights -> match ->
// correct.
inline GdcResult gdc_pipeline(const DepthMap& depth, const CameraCalib& calib,
                              const LidarScan& scan, const BeamSelection& beams,
                              const RigidTransform& lidar_to_cam, const GdcOptions& opts = {}) {
  GdcResult res;
  res.stats.scan_points = scan.size();
  const LidarScan sparse = sparsify(scan, beams);
  res.stats.sparse_points = sparse.size();
  const PointCloud lidar_cam = lidar_to_camera(sparse, lidar_to_cam);
  res.stats.camera_points = lidar_cam.size();
  const PointCloud stereo = backproject(depth, calib);
  res.stats.stereo_points = stereo.size();

  const LandmarkSet landmarks = match_landmarks(lidar_cam, depth, calib);
  res.stats.landmarks = landmarks.n();

  auto passthrough = [&] {
    CorrectedDepth& c = res.corrected;
    c.depth_map = depth;
    c.depths.clear();
    for (const auto& p : stereo.points) c.depths.push_back(p.z);
    c.landmark.assign(stereo.size(), 0);
    c.converged = true;
  };
  if (landmarks.empty() || stereo.size() < 2) {
    passthrough();
    return res;
  }

  const NeighborLists nbrs = build_knn(stereo, opts.k);
  res.stats.k_clamped = nbrs.k_clamped;
  const KnnWeights w = solve_weights(stereo, nbrs, opts.weights);
  res.stats.degenerate_rows = w.degenerate_rows.size();
  res.corrected = correct(depth, w, landmarks, opts.solve);
  res.applied = true;
  return res;
}

}  // namespace depthcorr
