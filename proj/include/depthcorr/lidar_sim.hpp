#pragma once

// LiDAR scans, beam sparsification by elevation angle, and the rigid
// LiDAR -> camera transform.
//
// LiDAR frame: x forward, y left, z up; sensor at the origin.

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "depthcorr/geometry.hpp"

namespace depthcorr {

struct LidarPoint {
  float x = 0.f;
  float y = 0.f;
  float z = 0.f;
  float reflectance = 0.f;

  friend bool operator==(const LidarPoint&, const LidarPoint&) = default;
};

struct LidarScan {
  std::vector<LidarPoint> points;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  friend bool operator==(const LidarScan&, const LidarScan&) = default;
};

// Signed elevation above the sensor's horizontal plane, degrees.
// Positive is up.
inline double elevation_angle_deg(double x, double y, double z) {
  const double horizontal = std::hypot(x, y);
  if (horizontal == 0.0 && z == 0.0) {
    throw std::invalid_argument("elevation_angle_deg: point at sensor origin");
  }
  return std::atan2(z, horizontal) * 180.0 / std::numbers::pi;
}

inline double elevation_angle_deg(const LidarPoint& p) {
  return elevation_angle_deg(p.x, p.y, p.z);
}

// Half-open elevation interval [lo_deg, hi_deg).
struct AngleInterval {
  double lo_deg = 0.0;
  double hi_deg = 0.0;

  bool contains(double theta) const noexcept {
    return theta >= lo_deg && theta < hi_deg;
  }
};

// Which elevation bins of a dense scanner survive sparsification. Bins are
// bin_step_deg wide starting at bin_start_deg; every selected interval must
// sit on that grid.
struct BeamSelection {
  double bin_start_deg = -23.6;
  double bin_step_deg = 0.4;
  std::vector<AngleInterval> intervals;

  // Dense 64-bin scanner: every bin from the start angle upward.
  static constexpr int kDenseBeamCount = 64;

  static BeamSelection four_beam() {
    return {-23.6, 0.4, {{-2.4, -2.0}, {-1.6, -1.2}, {-0.8, -0.4}, {0.0, 0.4}}};
  }
  static BeamSelection two_beam() { return {-23.6, 0.4, {{-2.4, -2.0}, {-0.8, -0.4}}}; }
  static BeamSelection all_beams() {
    BeamSelection s;
    s.intervals = {{s.bin_start_deg, s.bin_start_deg + kDenseBeamCount * s.bin_step_deg}};
    return s;
  }
  static BeamSelection none() { return {-23.6, 0.4, {}}; }

  // Elevation of the centre of bin `index`.
  double bin_center_deg(int index) const noexcept {
    return bin_start_deg + (index + 0.5) * bin_step_deg;
  }

  bool contains(double theta_deg) const noexcept {
    for (const auto& iv : intervals) {
      if (iv.contains(theta_deg)) return true;
    }
    return false;
  }

  void validate() const {
    if (!(bin_step_deg > 0.0)) throw std::invalid_argument("BeamSelection: step must be > 0");
    auto on_grid = [&](double a) {
      const double k = (a - bin_start_deg) / bin_step_deg;
      return std::abs(k - std::round(k)) < 1e-9;
    };
    for (std::size_t i = 0; i < intervals.size(); ++i) {
      const auto& a = intervals[i];
      if (!(a.lo_deg < a.hi_deg)) {
        throw std::invalid_argument("BeamSelection: empty or reversed interval");
      }
      if (!on_grid(a.lo_deg) || !on_grid(a.hi_deg)) {
        throw std::invalid_argument("BeamSelection: interval not aligned to bin grid");
      }
      for (std::size_t j = 0; j < i; ++j) {
        const auto& b = intervals[j];
        if (a.lo_deg < b.hi_deg && b.lo_deg < a.hi_deg) {
          throw std::invalid_argument("BeamSelection: overlapping intervals");
        }
      }
    }
  }
};

// Keeps points whose elevation falls into any selected interval, in order.
// Points at the sensor origin have no elevation and are dropped.
inline LidarScan sparsify(const LidarScan& scan, const BeamSelection& selection) {
  selection.validate();
  LidarScan out;
  for (const auto& p : scan.points) {
    if (p.x == 0.f && p.y == 0.f && p.z == 0.f) continue;
    if (selection.contains(elevation_angle_deg(p))) out.points.push_back(p);
  }
  return out;
}

// Rigid transform p' = R p + t with row-major R.
struct RigidTransform {
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::array<double, 3> translation{0, 0, 0};

  static RigidTransform identity() { return {}; }

  // Mount with no offset: camera x = -lidar y, camera y = -lidar z,
  // camera z = lidar x.
  static RigidTransform lidar_axes_to_camera() {
    return {{0, -1, 0, 0, 0, -1, 1, 0, 0}, {0, 0, 0}};
  }

  // From a row-major 3x4 matrix [R | t].
  static RigidTransform from_3x4(const std::array<double, 12>& m) {
    return {{m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]}, {m[3], m[7], m[11]}};
  }

  std::array<double, 3> apply(double x, double y, double z) const noexcept {
    const auto& r = rotation;
    return {r[0] * x + r[1] * y + r[2] * z + translation[0],
            r[3] * x + r[4] * y + r[5] * z + translation[1],
            r[6] * x + r[7] * y + r[8] * z + translation[2]};
  }

  // this * other: apply `other` first.
  RigidTransform compose(const RigidTransform& other) const noexcept {
    RigidTransform out;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += rotation[i * 3 + k] * other.rotation[k * 3 + j];
        out.rotation[i * 3 + j] = s;
      }
      double s = translation[i];
      for (int k = 0; k < 3; ++k) s += rotation[i * 3 + k] * other.translation[k];
      out.translation[i] = s;
    }
    return out;
  }

  RigidTransform inverse() const noexcept {
    RigidTransform out;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) out.rotation[i * 3 + j] = rotation[j * 3 + i];
    }
    for (int i = 0; i < 3; ++i) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s -= out.rotation[i * 3 + k] * translation[k];
      out.translation[i] = s;
    }
    return out;
  }
};

// Moves a scan into the camera frame and drops points with camera z <= 0.
inline PointCloud lidar_to_camera(const LidarScan& scan, const RigidTransform& lidar_to_cam) {
  PointCloud cloud;
  cloud.points.reserve(scan.size());
  for (const auto& p : scan.points) {
    const auto c = lidar_to_cam.apply(p.x, p.y, p.z);
    if (!(c[2] > 0.0)) continue;
    Point3 q;
    q.x = c[0];
    q.y = c[1];
    q.z = c[2];
    cloud.points.push_back(q);
  }
  return cloud;
}

}  // namespace depthcorr
