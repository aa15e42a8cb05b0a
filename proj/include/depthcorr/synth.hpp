#pragma once

// Procedural test scenes with exact ground truth: a ground plane, an
// optional background wall and fronto-parallel textured rectangles, seen
// by a rectified stereo pair and a 64-beam LiDAR.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "depthcorr/common.hpp"
#include "depthcorr/geometry.hpp"
#include "depthcorr/lidar_sim.hpp"

namespace depthcorr {

// Camera-frame rectangle at constant depth.
struct PlaneObject {
  double x_min = -1.0;
  double x_max = 1.0;
  double y_min = -1.0;  // top edge (y points down)
  double y_max = 1.0;
  double depth_m = 20.0;
  std::uint64_t texture_seed = 1;
  double texture_cell_m = 0.0;  // 0: about 2.5 pixels at this depth
  double bias_m = 0.0;          // systematic stereo error for corrupt()
};

struct Corruption {
  double noise_sigma_m = 0.0;             // constant part of the noise sigma
  double noise_sigma_per_m2 = 0.0;        // sigma grows by this * z^2
  double ground_bias_per_m2 = 0.0;        // ground error = this * z^2
  double background_bias_m = 0.0;
};

struct LidarRig {
  double azimuth_half_fov_deg = 45.0;
  double azimuth_step_deg = 0.08;
  RigidTransform lidar_to_cam = RigidTransform::lidar_axes_to_camera();
};

struct SceneSpec {
  std::size_t width = 320;
  std::size_t height = 96;
  CameraCalib calib{200.0, 200.0, 160.0, 48.0, 0.5};
  double camera_height_m = 1.65;   // ground is the plane y = +height; <= 0 disables it
  double background_depth_m = 0.0; // fronto-parallel wall; 0 disables it
  std::uint64_t ground_texture_seed = 7;
  double ground_cell_m = 0.25;
  std::vector<PlaneObject> objects;
  LidarRig lidar;
  Corruption corruption;
  std::uint64_t seed = 0;
  // +1 puts the second camera at x = -b so that left pixel u matches
  // second-view pixel u + d; -1 gives a conventional right camera at +b.
  int right_offset_sign = +1;
};

// Surface ids in the label map.
constexpr std::int16_t kSky = -1;
constexpr std::int16_t kGround = 0;
constexpr std::int16_t kBackground = 1;
constexpr std::int16_t object_label(std::size_t i) { return static_cast<std::int16_t>(2 + i); }

struct RenderedScene {
  GrayImage left;
  GrayImage right;
  DepthMap depth;               // exact pixel-centre depths
  Grid<std::int16_t> labels;    // surface id per pixel
  LidarScan lidar;              // LiDAR frame, all 64 beams
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline double lattice_value(std::uint64_t seed, std::int64_t i, std::int64_t j) {
  const std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(i) * 0x9e3779b1ull ^
                                                       splitmix64(static_cast<std::uint64_t>(j))));
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

// Bilinear value noise in [0, 1].
inline double value_noise(std::uint64_t seed, double a, double b) {
  const double fa = std::floor(a);
  const double fb = std::floor(b);
  const auto i = static_cast<std::int64_t>(fa);
  const auto j = static_cast<std::int64_t>(fb);
  const double ta = a - fa;
  const double tb = b - fb;
  const double v00 = lattice_value(seed, i, j);
  const double v10 = lattice_value(seed, i + 1, j);
  const double v01 = lattice_value(seed, i, j + 1);
  const double v11 = lattice_value(seed, i + 1, j + 1);
  return (1 - ta) * (1 - tb) * v00 + ta * (1 - tb) * v10 + (1 - ta) * tb * v01 + ta * tb * v11;
}

inline double texture(std::uint64_t seed, double a, double b, double cell) {
  const double coarse = value_noise(seed, a / cell, b / cell);
  const double fine = value_noise(seed + 0x51ed27u, a / (0.45 * cell), b / (0.45 * cell));
  return 0.6 * coarse + 0.4 * fine;
}

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  double x = 0.0, y = 0.0, z = 0.0;  // camera frame
  std::int16_t label = kSky;
  double shade = 0.0;                // texture value in [0, 1]
};

inline Hit cast_ray(const SceneSpec& s, const std::array<double, 3>& o, const std::array<double, 3>& d) {
  Hit best;
  auto consider = [&](double t, std::int16_t label) {
    if (!(t > 1e-9) || !(t < best.t)) return false;
    best.t = t;
    best.x = o[0] + t * d[0];
    best.y = o[1] + t * d[1];
    best.z = o[2] + t * d[2];
    best.label = label;
    return true;
  };
  if (d[2] > 0.0) {
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
      const auto& obj = s.objects[i];
      const double t = (obj.depth_m - o[2]) / d[2];
      const double x = o[0] + t * d[0];
      const double y = o[1] + t * d[1];
      if (x >= obj.x_min && x <= obj.x_max && y >= obj.y_min && y <= obj.y_max) {
        if (consider(t, object_label(i))) {
          const double cell = obj.texture_cell_m > 0.0 ? obj.texture_cell_m
                                                        : obj.depth_m * 2.5 / s.calib.f_u;
          best.shade = texture(obj.texture_seed, x, y, cell);
        }
      }
    }
    if (s.background_depth_m > 0.0) {
      const double t = (s.background_depth_m - o[2]) / d[2];
      if (consider(t, kBackground)) {
        best.shade = texture(s.seed ^ 0xb4c3u, best.x, best.y, s.background_depth_m * 2.5 / s.calib.f_u);
      }
    }
  }
  if (s.camera_height_m > 0.0 && d[1] > 0.0) {
    const double t = (s.camera_height_m - o[1]) / d[1];
    if (o[2] + t * d[2] > 0.0 && consider(t, kGround)) {
      best.shade = texture(s.ground_texture_seed, best.x, best.z, s.ground_cell_m);
    }
  }
  return best;
}

inline std::uint8_t to_gray(double shade) {
  return static_cast<std::uint8_t>(std::lround(20.0 + 215.0 * std::clamp(shade, 0.0, 1.0)));
}

}  // namespace detail

// Renders both views, the exact depth of the first view and a 64-beam scan
// cast at the bin-centre elevations against the same geometry.
inline RenderedScene render(const SceneSpec& spec) {
  spec.calib.validate();
  const auto& c = spec.calib;
  RenderedScene out;
  out.left = GrayImage(spec.width, spec.height, 0);
  out.right = GrayImage(spec.width, spec.height, 0);
  out.depth = DepthMap(spec.width, spec.height);
  out.labels = Grid<std::int16_t>(spec.width, spec.height, kSky);

  const double second_x = -static_cast<double>(spec.right_offset_sign) * c.baseline_m;
  for (std::size_t v = 0; v < spec.height; ++v) {
    for (std::size_t u = 0; u < spec.width; ++u) {
      const std::array<double, 3> dir{(static_cast<double>(u) - c.c_u) / c.f_u,
                                      (static_cast<double>(v) - c.c_v) / c.f_v, 1.0};
      const auto h = detail::cast_ray(spec, {0.0, 0.0, 0.0}, dir);
      if (h.label != kSky) {
        out.depth.set(u, v, h.z);
        out.labels(u, v) = h.label;
        out.left(u, v) = detail::to_gray(h.shade);
      }
      const auto h2 = detail::cast_ray(spec, {second_x, 0.0, 0.0}, dir);
      if (h2.label != kSky) out.right(u, v) = detail::to_gray(h2.shade);
    }
  }

  const BeamSelection grid = BeamSelection::all_beams();
  const RigidTransform& to_cam = spec.lidar.lidar_to_cam;
  const RigidTransform to_lidar = to_cam.inverse();
  const auto origin = to_cam.apply(0.0, 0.0, 0.0);
  const double deg = std::numbers::pi / 180.0;
  const auto steps = static_cast<long>(std::floor(2.0 * spec.lidar.azimuth_half_fov_deg /
                                                  spec.lidar.azimuth_step_deg + 1e-9));
  for (int beam = 0; beam < BeamSelection::kDenseBeamCount; ++beam) {
    const double el = grid.bin_center_deg(beam) * deg;
    for (long a = 0; a <= steps; ++a) {
      const double az = (-spec.lidar.azimuth_half_fov_deg + static_cast<double>(a) * spec.lidar.azimuth_step_deg) * deg;
      const double lx = std::cos(el) * std::cos(az);
      const double ly = std::cos(el) * std::sin(az);
      const double lz = std::sin(el);
      // Directions only rotate.
      auto d = to_cam.apply(lx, ly, lz);
      for (int i = 0; i < 3; ++i) d[i] -= origin[i];
      const auto h = detail::cast_ray(spec, origin, d);
      if (h.label == kSky) continue;
      const auto p = to_lidar.apply(h.x, h.y, h.z);
      out.lidar.points.push_back({static_cast<float>(p[0]), static_cast<float>(p[1]),
                                  static_cast<float>(p[2]), static_cast<float>(h.shade)});
    }
  }
  return out;
}

// Stereo-like depth: true depth plus a per-surface systematic bias and
// zero-mean Gaussian noise with sigma = noise_sigma_m + noise_sigma_per_m2 * z^2.
// Deterministic for a given spec.seed. Pixels pushed to z <= 0 become invalid.
inline DepthMap corrupt(const DepthMap& truth, const Grid<std::int16_t>& labels, const SceneSpec& spec) {
  const Corruption& cr = spec.corruption;
  std::mt19937_64 rng(spec.seed ^ 0x5eed5eedull);
  std::normal_distribution<double> normal(0.0, 1.0);
  DepthMap out(truth.width(), truth.height());
  for (std::size_t i = 0; i < truth.pixel_count(); ++i) {
    if (!truth.mask()[i]) continue;
    const double z = truth.values()[i];
    const std::int16_t label = labels.data()[i];
    double bias = 0.0;
    if (label == kGround) {
      bias = cr.ground_bias_per_m2 * z * z;
    } else if (label == kBackground) {
      bias = cr.background_bias_m;
    } else if (label >= 2) {
      bias = spec.objects[static_cast<std::size_t>(label - 2)].bias_m;
    }
    const double sigma = cr.noise_sigma_m + cr.noise_sigma_per_m2 * z * z;
    const double noise = sigma > 0.0 ? sigma * normal(rng) : 0.0;
    const double zc = z + bias + noise;
    if (zc > 0.0) {
      out.values()[i] = zc;
      out.mask()[i] = 1;
    }
  }
  return out;
}

// A street-like scene at 320x96: a wide object at 17.5 m whose stereo depth
// reads 2 m too far, a second one at 40 m reading 1 m too near, unbiased
// ground and a wall at 72 m. The sensor sits 4.5 m above the ground so the
// four low beams reach the wall rather than the road, even at the image sides
// where a beam's ground hit comes closest.
inline SceneSpec demo_scene(std::uint64_t seed = 1) {
  SceneSpec s;
  s.camera_height_m = 4.5;
  s.background_depth_m = 72.0;
  s.seed = seed;
  s.objects.push_back({-5.0, 5.0, -1.5, 4.5, 17.5, seed * 31 + 3, 0.0, 2.0});
  s.objects.push_back({9.0, 16.0, -2.0, 4.5, 40.0, seed * 31 + 5, 0.0, -1.0});
  return s;
}

}  // namespace depthcorr
