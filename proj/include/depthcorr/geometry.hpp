#pragma once

// Pinhole camera model for a rectified stereo pair, dense depth/disparity
// maps and the conversions between maps and point clouds.
//
// Camera frame: x right, y down, z forward (meters).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "depthcorr/common.hpp"

namespace depthcorr {

struct CameraCalib {
  double f_u = 0.0;         // horizontal focal length, pixels
  double f_v = 0.0;         // vertical focal length, pixels
  double c_u = 0.0;         // principal point x, pixels
  double c_v = 0.0;         // principal point y, pixels
  double baseline_m = 0.0;  // stereo baseline, meters

  void validate() const {
    if (!(f_u > 0.0) || !(f_v > 0.0) || !(baseline_m > 0.0)) {
      throw std::invalid_argument(
          "CameraCalib: focal lengths and baseline must be positive");
    }
  }

  // Product f_u * b; depth = focal_baseline() / disparity.
  double focal_baseline() const noexcept { return f_u * baseline_m; }
};

// Range of depths a stereo conversion may produce; anything outside is
// marked invalid rather than saturated.
struct DepthRange {
  double min_m = 1.0;
  double max_m = 80.0;

  bool contains(double z) const noexcept { return z >= min_m && z <= max_m; }
};

// Dense per-pixel scalar map plus validity mask. The tag keeps depth and
// disparity maps from being mixed up.
template <typename Tag>
class PixelMap {
 public:
  PixelMap() = default;
  PixelMap(std::size_t width, std::size_t height)
      : values_(width, height, 0.0), valid_(width, height, 0) {}

  std::size_t width() const noexcept { return values_.width(); }
  std::size_t height() const noexcept { return values_.height(); }
  std::size_t pixel_count() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double value(std::size_t u, std::size_t v) const { return values_(u, v); }
  bool valid(std::size_t u, std::size_t v) const { return valid_(u, v) != 0; }

  void set(std::size_t u, std::size_t v, double x) {
    values_(u, v) = x;
    valid_(u, v) = 1;
  }
  void invalidate(std::size_t u, std::size_t v) {
    values_(u, v) = 0.0;
    valid_(u, v) = 0;
  }

  std::size_t valid_count() const noexcept {
    std::size_t n = 0;
    for (auto m : valid_.data()) n += (m != 0);
    return n;
  }

  // Flat row-major access (index = v * width + u).
  const std::vector<double>& values() const noexcept { return values_.data(); }
  const std::vector<std::uint8_t>& mask() const noexcept { return valid_.data(); }
  std::vector<double>& values() noexcept { return values_.data(); }
  std::vector<std::uint8_t>& mask() noexcept { return valid_.data(); }

  friend bool operator==(const PixelMap&, const PixelMap&) = default;

 private:
  Grid<double> values_;
  Grid<std::uint8_t> valid_;
};

struct DepthTag {};
struct DisparityTag {};
using DepthMap = PixelMap<DepthTag>;
using DisparityMap = PixelMap<DisparityTag>;

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  std::optional<Pixel> source_pixel;
  bool landmark = false;
};

struct PointCloud {
  std::vector<Point3> points;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  const Point3& operator[](std::size_t i) const { return points[i]; }
  Point3& operator[](std::size_t i) { return points[i]; }
};

namespace detail {

template <typename Tag>
void require_nonempty(const PixelMap<Tag>& map, const char* what) {
  if (map.width() == 0 || map.height() == 0) {
    throw EmptyInputError(std::string(what) + ": map has zero size");
  }
}

}  // namespace detail

// z = f_u * b / d on valid pixels. Non-positive disparities and depths
// outside `range` come out invalid.
inline DepthMap disparity_to_depth(const DisparityMap& disparity,
                                   const CameraCalib& calib,
                                   const DepthRange& range = {}) {
  detail::require_nonempty(disparity, "disparity_to_depth");
  calib.validate();
  const double fb = calib.focal_baseline();
  DepthMap depth(disparity.width(), disparity.height());
  for (std::size_t v = 0; v < disparity.height(); ++v) {
    for (std::size_t u = 0; u < disparity.width(); ++u) {
      if (!disparity.valid(u, v)) continue;
      const double d = disparity.value(u, v);
      if (!(d > 0.0)) continue;
      const double z = fb / d;
      if (range.contains(z)) depth.set(u, v, z);
    }
  }
  return depth;
}

inline DisparityMap depth_to_disparity(const DepthMap& depth,
                                       const CameraCalib& calib) {
  detail::require_nonempty(depth, "depth_to_disparity");
  calib.validate();
  const double fb = calib.focal_baseline();
  DisparityMap disparity(depth.width(), depth.height());
  for (std::size_t v = 0; v < depth.height(); ++v) {
    for (std::size_t u = 0; u < depth.width(); ++u) {
      if (!depth.valid(u, v)) continue;
      const double z = depth.value(u, v);
      if (!(z > 0.0)) {
        throw std::invalid_argument("depth_to_disparity: non-positive depth");
      }
      disparity.set(u, v, fb / z);
    }
  }
  return disparity;
}

// Lifts every valid pixel into the camera frame, in row-major pixel order.
// The emitted z is the depth value itself, untouched.
inline PointCloud backproject(const DepthMap& depth, const CameraCalib& calib) {
  calib.validate();
  PointCloud cloud;
  cloud.points.reserve(depth.valid_count());
  for (std::size_t v = 0; v < depth.height(); ++v) {
    for (std::size_t u = 0; u < depth.width(); ++u) {
      if (!depth.valid(u, v)) continue;
      const double z = depth.value(u, v);
      Point3 p;
      p.x = (static_cast<double>(u) - calib.c_u) * z / calib.f_u;
      p.y = (static_cast<double>(v) - calib.c_v) * z / calib.f_v;
      p.z = z;
      p.source_pixel = Pixel{static_cast<int>(u), static_cast<int>(v)};
      cloud.points.push_back(p);
    }
  }
  return cloud;
}

struct ProjectedPoint {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;
  std::size_t index = 0;  // position in the input cloud
};

struct Projection {
  std::vector<ProjectedPoint> points;
  std::size_t dropped_behind = 0;   // z <= 0
  std::size_t dropped_outside = 0;  // nearest pixel falls off the image
};

// Continuous pinhole projection. A point is kept when its nearest pixel
// lies inside a width x height image, i.e. u in [-0.5, width - 0.5).
inline Projection project(const PointCloud& cloud, const CameraCalib& calib,
                          std::size_t width, std::size_t height) {
  calib.validate();
  Projection out;
  out.points.reserve(cloud.size());
  const double u_hi = static_cast<double>(width) - 0.5;
  const double v_hi = static_cast<double>(height) - 0.5;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud[i];
    if (!(p.z > 0.0)) {
      ++out.dropped_behind;
      continue;
    }
    const double u = calib.f_u * p.x / p.z + calib.c_u;
    const double v = calib.f_v * p.y / p.z + calib.c_v;
    if (!(u >= -0.5 && u < u_hi && v >= -0.5 && v < v_hi)) {
      ++out.dropped_outside;
      continue;
    }
    out.points.push_back({u, v, p.z, i});
  }
  return out;
}

// First-order depth error caused by a disparity error delta_d:
// dZ = z^2 * dD / (f_u * b).
inline double depth_error_bound(double z, double delta_d, const CameraCalib& calib) {
  if (!(z > 0.0)) throw std::invalid_argument("depth_error_bound: z must be > 0");
  calib.validate();
  return z * z * delta_d / calib.focal_baseline();
}

// Exact depth change when the disparity of a point at depth z grows by
// delta_d pixels: z - f b / (f b / z + delta_d).
inline double depth_error_exact(double z, double delta_d, const CameraCalib& calib) {
  if (!(z > 0.0)) throw std::invalid_argument("depth_error_exact: z must be > 0");
  calib.validate();
  const double fb = calib.focal_baseline();
  return z - fb / (fb / z + delta_d);
}

}  // namespace depthcorr
