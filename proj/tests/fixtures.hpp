#pragma once

// Small builders shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "depthcorr/gdc.hpp"

namespace depthcorr::fixture {

// One row of pixels carrying the given depths, all valid, so that point i
// of the back-projected cloud is pixel (i, 0).
inline DepthMap row_depth_map(const std::vector<double>& z) {
  DepthMap m(z.size(), 1);
  for (std::size_t i = 0; i < z.size(); ++i) m.set(i, 0, z[i]);
  return m;
}

inline std::vector<double> depths_of(const PointCloud& c) {
  std::vector<double> z(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) z[i] = c[i].z;
  return z;
}

// Landmark set over a cloud of n points with the given (index, G) pairs.
inline LandmarkSet landmarks(std::size_t n, const std::vector<std::pair<std::uint32_t, double>>& pins) {
  LandmarkSet s;
  s.n_points = n;
  for (const auto& [i, g] : pins) s.matches.push_back({Pixel{static_cast<int>(i), 0}, i, g});
  std::sort(s.matches.begin(), s.matches.end(),
            [](const LandmarkMatch& a, const LandmarkMatch& b) { return a.point_index < b.point_index; });
  return s;
}

// `count` distinct indices out of [0, n).
inline std::vector<std::uint32_t> pick(std::size_t n, std::size_t count, std::mt19937_64& rng) {
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(count);
  return idx;
}

inline Eigen::MatrixXd dense_weights(const KnnWeights& w) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(w.n_points),
                                            static_cast<Eigen::Index>(w.n_points));
  for (std::size_t i = 0; i < w.n_points; ++i) {
    for (std::size_t j = 0; j < w.k; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(w.neighbors[i * w.k + j])) +=
          w.weights[i * w.k + j];
    }
  }
  return m;
}

}  // namespace depthcorr::fixture
