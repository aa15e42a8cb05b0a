#pragma once

// Depth-error metrics: binned median absolute error and smooth-L1 loss.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "depthcorr/geometry.hpp"

namespace depthcorr {

// 0, 5, ..., 70 m.
inline std::vector<double> default_bin_edges() {
  std::vector<double> edges;
  for (int z = 0; z <= 70; z += 5) edges.push_back(z);
  return edges;
}

struct BinnedErrorReport {
  std::vector<double> bin_edges;           // bins are [edge_i, edge_{i+1})
  std::vector<double> median_abs_error;    // NaN for empty bins
  std::vector<std::size_t> counts;
  std::size_t total = 0;                   // pixels that landed in a bin
  std::size_t out_of_range = 0;            // jointly valid, truth outside the edges

  std::size_t bins() const noexcept { return counts.size(); }
};

namespace detail {

inline double median_in_place(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

// Median |pred - truth| per truth-depth bin over pixels valid in both maps.
inline BinnedErrorReport binned_median_error(const DepthMap& pred, const DepthMap& truth,
                                             const std::vector<double>& bin_edges = default_bin_edges()) {
  if (pred.width() != truth.width() || pred.height() != truth.height()) {
    throw std::invalid_argument("binned_median_error: map sizes differ");
  }
  if (bin_edges.size() < 2) throw std::invalid_argument("binned_median_error: need at least one bin");
  for (std::size_t i = 1; i < bin_edges.size(); ++i) {
    if (!(bin_edges[i] > bin_edges[i - 1])) {
      throw std::invalid_argument("binned_median_error: bin edges must increase");
    }
  }
  const std::size_t nb = bin_edges.size() - 1;
  std::vector<std::vector<double>> errors(nb);
  BinnedErrorReport rep;
  rep.bin_edges = bin_edges;
  std::size_t joint = 0;
  for (std::size_t i = 0; i < pred.pixel_count(); ++i) {
    if (!pred.mask()[i] || !truth.mask()[i]) continue;
    ++joint;
    const double t = truth.values()[i];
    const auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), t);
    if (it == bin_edges.begin() || it == bin_edges.end()) {
      ++rep.out_of_range;
      continue;
    }
    const auto b = static_cast<std::size_t>(it - bin_edges.begin()) - 1;
    errors[b].push_back(std::abs(pred.values()[i] - t));
  }
  if (joint == 0) throw EmptyInputError("binned_median_error: no jointly valid pixels");
  rep.counts.resize(nb);
  rep.median_abs_error.resize(nb, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t b = 0; b < nb; ++b) {
    rep.counts[b] = errors[b].size();
    rep.total += errors[b].size();
    if (!errors[b].empty()) rep.median_abs_error[b] = detail::median_in_place(errors[b]);
  }
  return rep;
}

// 0.5 r^2 for |r| < 1, |r| - 0.5 otherwise.
inline double smooth_l1(double r) noexcept {
  const double a = std::abs(r);
  return a < 1.0 ? 0.5 * r * r : a - 0.5;
}

// Mean smooth-L1 of (pred - truth) over pixels valid in both maps. Works
// for depth and disparity maps alike.
template <typename Tag>
double smooth_l1_loss(const PixelMap<Tag>& pred, const PixelMap<Tag>& truth) {
  if (pred.width() != truth.width() || pred.height() != truth.height()) {
    throw std::invalid_argument("smooth_l1_loss: map sizes differ");
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.pixel_count(); ++i) {
    if (!pred.mask()[i] || !truth.mask()[i]) continue;
    sum += smooth_l1(pred.values()[i] - truth.values()[i]);
    ++n;
  }
  if (n == 0) throw EmptyInputError("smooth_l1_loss: empty mask");
  return sum / static_cast<double>(n);
}

// Sparse ground-truth depth from camera-frame LiDAR points, nearest return
// per pixel.
inline DepthMap lidar_depth_map(const PointCloud& lidar_cam, const CameraCalib& calib,
                                std::size_t width, std::size_t height) {
  DepthMap out(width, height);
  const auto proj = project(lidar_cam, calib, width, height);
  for (const auto& p : proj.points) {
    const auto u = static_cast<std::size_t>(std::lround(p.u));
    const auto v = static_cast<std::size_t>(std::lround(p.v));
    if (!out.valid(u, v) || p.z < out.value(u, v)) out.set(u, v, p.z);
  }
  return out;
}

inline void write_report_csv(std::ostream& out, const BinnedErrorReport& rep) {
  out << "bin_lo,bin_hi,count,median_abs_err_m\n";
  for (std::size_t b = 0; b < rep.bins(); ++b) {
    out << rep.bin_edges[b] << ',' << rep.bin_edges[b + 1] << ',' << rep.counts[b] << ',';
    if (rep.counts[b] > 0) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", rep.median_abs_error[b]);
      out << buf;
    } else {
      out << "nan";
    }
    out << '\n';
  }
}

inline void write_report_table(std::ostream& out, const BinnedErrorReport& rep) {
  char line[96];
  std::snprintf(line, sizeof(line), "%-14s %10s %16s\n", "depth bin (m)", "pixels", "median |err| (m)");
  out << line;
  for (std::size_t b = 0; b < rep.bins(); ++b) {
    char range[32];
    std::snprintf(range, sizeof(range), "[%g, %g)", rep.bin_edges[b], rep.bin_edges[b + 1]);
    if (rep.counts[b] > 0) {
      std::snprintf(line, sizeof(line), "%-14s %10zu %16.4f\n", range, rep.counts[b],
                    rep.median_abs_error[b]);
    } else {
      std::snprintf(line, sizeof(line), "%-14s %10zu %16s\n", range, rep.counts[b], "-");
    }
    out << line;
  }
  out << "total pixels: " << rep.total << ", outside bins: " << rep.out_of_range << '\n';
}

struct ReportSeries {
  std::string label;
  BinnedErrorReport report;
};

// Grouped bar chart of per-bin medians, one colour per series. All series
// must share the same bins.
inline void write_report_svg(std::ostream& out, const std::vector<ReportSeries>& series) {
  if (series.empty()) throw std::invalid_argument("write_report_svg: no series");
  const std::size_t nb = series.front().report.bins();
  for (const auto& s : series) {
    if (s.report.bins() != nb) throw std::invalid_argument("write_report_svg: bins differ");
  }
  double ymax = 0.0;
  for (const auto& s : series) {
    for (std::size_t b = 0; b < nb; ++b) {
      if (s.report.counts[b] > 0) ymax = std::max(ymax, s.report.median_abs_error[b]);
    }
  }
  if (!(ymax > 0.0)) ymax = 1.0;
  const double width = 720, height = 360, left = 60, right = 20, top = 30, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  const double group_w = plot_w / static_cast<double>(nb);
  const double bar_w = group_w * 0.8 / static_cast<double>(series.size());
  static const char* colors[] = {"#7b4ea3", "#2f6fd1", "#e0a526", "#3a9a5b", "#c0392b"};

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double val = ymax * t / 4.0;
    const double y = top + plot_h - plot_h * t / 4.0;
    out << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << val
        << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = colors[s % 5];
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& rep = series[s].report;
      if (rep.counts[b] == 0) continue;
      const double h = plot_h * rep.median_abs_error[b] / ymax;
      const double x = left + group_w * static_cast<double>(b) + group_w * 0.1 + bar_w * static_cast<double>(s);
      out << "<rect x=\"" << x << "\" y=\"" << top + plot_h - h << "\" width=\"" << bar_w
          << "\" height=\"" << h << "\" fill=\"" << color << "\"/>\n";
    }
    out << "<rect x=\"" << left + 10 + 130 * static_cast<double>(s) << "\" y=\"8\" width=\"10\" height=\"10\" fill=\""
        << color << "\"/>\n";
    out << "<text x=\"" << left + 24 + 130 * static_cast<double>(s) << "\" y=\"17\">" << series[s].label
        << "</text>\n";
  }
  const auto& edges = series.front().report.bin_edges;
  for (std::size_t b = 0; b < nb; ++b) {
    const double x = left + group_w * (static_cast<double>(b) + 0.5);
    out << "<text x=\"" << x << "\" y=\"" << top + plot_h + 16 << "\" text-anchor=\"middle\">"
        << edges[b] << "-" << edges[b + 1] << "</text>\n";
  }
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\">true depth (m)</text>\n";
  out << "<text x=\"14\" y=\"" << top + plot_h / 2 << "\" transform=\"rotate(-90 14 " << top + plot_h / 2
      << ")\" text-anchor=\"middle\">median |error| (m)</text>\n";
  out << "</svg>\n";
}

}  // namespace depthcorr
