#pragma once

// Stereo score volumes over a disparity or depth grid: SAD block matching,
// disparity -> depth remapping and the soft-argmax readout.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "depthcorr/common.hpp"
#include "depthcorr/geometry.hpp"

namespace depthcorr {

enum class GridKind : std::uint32_t { kDisparity = 0, kDepth = 1 };

// Scores per (u, v, level), higher = more likely. Levels of one pixel are
// contiguous in memory.
class CostVolume {
 public:
  CostVolume() = default;
  CostVolume(std::size_t width, std::size_t height, GridKind kind, std::vector<double> grid)
      : width_(width), height_(height), kind_(kind), grid_(std::move(grid)) {
    if (grid_.empty()) throw std::invalid_argument("CostVolume: empty grid");
    for (std::size_t i = 1; i < grid_.size(); ++i) {
      if (!(grid_[i] > grid_[i - 1])) {
        throw std::invalid_argument("CostVolume: grid must be strictly increasing");
      }
    }
    scores_.assign(width_ * height_ * grid_.size(), 0.f);
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t levels() const noexcept { return grid_.size(); }
  GridKind kind() const noexcept { return kind_; }
  const std::vector<double>& grid() const noexcept { return grid_; }

  float& score(std::size_t u, std::size_t v, std::size_t g) {
    return scores_[(v * width_ + u) * grid_.size() + g];
  }
  float score(std::size_t u, std::size_t v, std::size_t g) const {
    return scores_[(v * width_ + u) * grid_.size() + g];
  }
  // All levels of one pixel.
  const float* pixel_scores(std::size_t u, std::size_t v) const {
    return scores_.data() + (v * width_ + u) * grid_.size();
  }
  float* pixel_scores(std::size_t u, std::size_t v) {
    return scores_.data() + (v * width_ + u) * grid_.size();
  }

  const std::vector<float>& scores() const noexcept { return scores_; }
  std::vector<float>& scores() noexcept { return scores_; }

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  GridKind kind_ = GridKind::kDisparity;
  std::vector<double> grid_;
  std::vector<float> scores_;
};

struct BlockMatchOptions {
  int max_disparity = 191;
  int window = 9;  // odd side length of the square SAD window
  // Column offset of the matching right-image pixel: +1 compares left (u, v)
  // with right (u + d, v); -1 gives the u - d convention.
  int right_offset_sign = +1;
};

// score(u, v, d) = -sum over the window of |L(u+i, v+j) - R(u+i + s*d, v+j)|
// with edge clamping for every sample that falls off the image.
inline CostVolume build_disparity_volume(const GrayImage& left, const GrayImage& right,
                                         const BlockMatchOptions& opts = {}) {
  if (left.width() != right.width() || left.height() != right.height()) {
    throw std::invalid_argument("build_disparity_volume: image sizes differ");
  }
  if (left.empty()) throw EmptyInputError("build_disparity_volume: empty images");
  if (opts.max_disparity < 1) throw std::invalid_argument("build_disparity_volume: max_disparity < 1");
  if (opts.window < 1 || opts.window % 2 == 0) {
    throw std::invalid_argument("build_disparity_volume: window must be odd and positive");
  }
  if (opts.right_offset_sign != 1 && opts.right_offset_sign != -1) {
    throw std::invalid_argument("build_disparity_volume: right_offset_sign must be +1 or -1");
  }
  const long w = static_cast<long>(left.width());
  const long h = static_cast<long>(left.height());
  const long r = opts.window / 2;
  std::vector<double> grid(static_cast<std::size_t>(opts.max_disparity) + 1);
  for (std::size_t d = 0; d < grid.size(); ++d) grid[d] = static_cast<double>(d);
  CostVolume vol(left.width(), left.height(), GridKind::kDisparity, std::move(grid));

  // Per disparity: absolute differences on a padded canvas, then a
  // separable box sum. Integer arithmetic keeps it exact and deterministic.
  const long pw = w + 2 * r;
  const long ph = h + 2 * r;
  std::vector<std::int32_t> diff(static_cast<std::size_t>(pw * ph));
  std::vector<std::int32_t> rowsum(static_cast<std::size_t>(w * ph));
  for (int d = 0; d <= opts.max_disparity; ++d) {
    const long shift = static_cast<long>(opts.right_offset_sign) * d;
    for (long y = 0; y < ph; ++y) {
      for (long x = 0; x < pw; ++x) {
        const long u = x - r;
        const long v = y - r;
        const int a = left.clamped(u, v);
        const int b = right.clamped(u + shift, v);
        diff[static_cast<std::size_t>(y * pw + x)] = std::abs(a - b);
      }
    }
    for (long y = 0; y < ph; ++y) {
      const std::int32_t* row = diff.data() + y * pw;
      std::int32_t s = 0;
      for (long x = 0; x < 2 * r + 1; ++x) s += row[x];
      rowsum[static_cast<std::size_t>(y * w)] = s;
      for (long u = 1; u < w; ++u) {
        s += row[u + 2 * r] - row[u - 1];
        rowsum[static_cast<std::size_t>(y * w + u)] = s;
      }
    }
    for (long u = 0; u < w; ++u) {
      std::int32_t s = 0;
      for (long y = 0; y < 2 * r + 1; ++y) s += rowsum[static_cast<std::size_t>(y * w + u)];
      vol.score(static_cast<std::size_t>(u), 0, static_cast<std::size_t>(d)) = -static_cast<float>(s);
      for (long v = 1; v < h; ++v) {
        s += rowsum[static_cast<std::size_t>((v + 2 * r) * w + u)] -
             rowsum[static_cast<std::size_t>((v - 1) * w + u)];
        vol.score(static_cast<std::size_t>(u), static_cast<std::size_t>(v),
                  static_cast<std::size_t>(d)) = -static_cast<float>(s);
      }
    }
  }
  return vol;
}

// Uniform depth grid [min_m, max_m] with the given spacing; defaults give
// 80 levels at 1 m.
inline std::vector<double> make_depth_grid(double min_m = 1.0, double max_m = 80.0,
                                           double step_m = 1.0) {
  if (!(min_m > 0.0) || !(max_m > min_m) || !(step_m > 0.0)) {
    throw std::invalid_argument("make_depth_grid: need 0 < min < max and step > 0");
  }
  std::vector<double> grid;
  const auto n = static_cast<std::size_t>(std::floor((max_m - min_m) / step_m + 1e-9)) + 1;
  for (std::size_t i = 0; i < n; ++i) grid.push_back(min_m + static_cast<double>(i) * step_m);
  return grid;
}

// Resamples a disparity volume onto a depth grid: each depth z reads the
// disparity scores at d = f_u b / z by linear interpolation along the
// disparity axis, clamped to the disparity grid's ends.
inline CostVolume remap_to_depth_volume(const CostVolume& disp, const CameraCalib& calib,
                                        const std::vector<double>& depth_grid) {
  if (disp.kind() != GridKind::kDisparity) {
    throw std::invalid_argument("remap_to_depth_volume: input must be a disparity volume");
  }
  calib.validate();
  CostVolume out(disp.width(), disp.height(), GridKind::kDepth, depth_grid);
  const auto& dg = disp.grid();
  const double fb = calib.focal_baseline();

  // The interpolation stencil depends only on the depth level.
  struct Tap {
    std::size_t lo = 0;
    std::size_t hi = 0;
    double t = 0.0;
  };
  std::vector<Tap> taps(depth_grid.size());
  for (std::size_t k = 0; k < depth_grid.size(); ++k) {
    if (!(depth_grid[k] > 0.0)) throw std::invalid_argument("remap_to_depth_volume: depth <= 0");
    const double d = fb / depth_grid[k];
    Tap tap;
    if (d <= dg.front()) {
      tap = {0, 0, 0.0};
    } else if (d >= dg.back()) {
      tap = {dg.size() - 1, dg.size() - 1, 0.0};
    } else {
      const auto it = std::upper_bound(dg.begin(), dg.end(), d);
      const auto hi = static_cast<std::size_t>(it - dg.begin());
      const std::size_t lo = hi - 1;
      tap = {lo, hi, (d - dg[lo]) / (dg[hi] - dg[lo])};
    }
    taps[k] = tap;
  }

  for (std::size_t v = 0; v < disp.height(); ++v) {
    for (std::size_t u = 0; u < disp.width(); ++u) {
      const float* in = disp.pixel_scores(u, v);
      float* o = out.pixel_scores(u, v);
      for (std::size_t k = 0; k < taps.size(); ++k) {
        const Tap& tp = taps[k];
        if (tp.t == 0.0) {
          o[k] = in[tp.lo];  // on a knot: copy the score untouched
        } else {
          o[k] = static_cast<float>((1.0 - tp.t) * in[tp.lo] + tp.t * in[tp.hi]);
        }
      }
    }
  }
  return out;
}

// Softmax-weighted mean of the grid at one pixel. Uses max subtraction;
// -inf scores get zero weight.
inline double soft_argmax_pixel(const float* scores, const std::vector<double>& grid) {
  const std::size_t n = grid.size();
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < n; ++g) peak = std::max(peak, static_cast<double>(scores[g]));
  if (!std::isfinite(peak)) {
    // All -inf (or NaN): fall back to the grid mean.
    double s = 0.0;
    for (double x : grid) s += x;
    return s / static_cast<double>(n);
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t g = 0; g < n; ++g) {
    const double e = std::exp(static_cast<double>(scores[g]) - peak);
    num += e * grid[g];
    den += e;
  }
  return num / den;
}

// Per-pixel soft-argmax; the result is in grid units (pixels or meters).
inline Grid<double> soft_argmax(const CostVolume& vol) {
  if (vol.levels() < 2) throw std::invalid_argument("soft_argmax: need at least 2 grid levels");
  Grid<double> out(vol.width(), vol.height());
  for (std::size_t v = 0; v < vol.height(); ++v) {
    for (std::size_t u = 0; u < vol.width(); ++u) {
      out(u, v) = soft_argmax_pixel(vol.pixel_scores(u, v), vol.grid());
    }
  }
  return out;
}

inline DepthMap soft_argmax_depth(const CostVolume& vol) {
  if (vol.kind() != GridKind::kDepth) throw std::invalid_argument("soft_argmax_depth: not a depth volume");
  const auto g = soft_argmax(vol);
  DepthMap out(vol.width(), vol.height());
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.values()[i] = g.data()[i];
    out.mask()[i] = 1;
  }
  return out;
}

// Zero expected disparity carries no depth and is left invalid.
inline DisparityMap soft_argmax_disparity(const CostVolume& vol) {
  if (vol.kind() != GridKind::kDisparity) {
    throw std::invalid_argument("soft_argmax_disparity: not a disparity volume");
  }
  const auto g = soft_argmax(vol);
  DisparityMap out(vol.width(), vol.height());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.data()[i] > 0.0) {
      out.values()[i] = g.data()[i];
      out.mask()[i] = 1;
    }
  }
  return out;
}

// Debug dump: u32 width, height, levels, kind, then float32 scores in
// memory order, all little-endian.
inline void write_volume_raw(std::ostream& out, const CostVolume& vol) {
  auto put = [&](std::uint32_t x) {
    if constexpr (std::endian::native != std::endian::little) {
      x = ((x & 0xffu) << 24) | ((x & 0xff00u) << 8) | ((x >> 8) & 0xff00u) | (x >> 24);
    }
    out.write(reinterpret_cast<const char*>(&x), 4);
  };
  put(static_cast<std::uint32_t>(vol.width()));
  put(static_cast<std::uint32_t>(vol.height()));
  put(static_cast<std::uint32_t>(vol.levels()));
  put(static_cast<std::uint32_t>(vol.kind()));
  for (float s : vol.scores()) put(std::bit_cast<std::uint32_t>(s));
}

inline void save_volume_raw(const std::string& path, const CostVolume& vol) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write volume dump: " + path);
  write_volume_raw(out, vol);
}

}  // namespace depthcorr
