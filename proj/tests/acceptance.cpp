// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Every check runs at its stated tolerance.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "depthcorr/cost_volume.hpp"
#include "depthcorr/eval.hpp"
#include "depthcorr/gdc.hpp"
#include "depthcorr/kitti_io.hpp"
#include "depthcorr/png_io.hpp"
#include "depthcorr/synth.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace {

using namespace depthcorr;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Disparity/depth algebra

Outcome depth_algebra() {
  Outcome out;
  const CameraCalib kitti{721.0, 721.0, 609.5, 172.8, 0.54};
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ud(4.9, 389.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    DisparityMap d(64, 32);
    for (std::size_t i = 0; i < d.pixel_count(); ++i) {
      d.values()[i] = ud(rng);
      d.mask()[i] = 1;
    }
    const auto back = depth_to_disparity(disparity_to_depth(d, kitti), kitti);
    for (std::size_t i = 0; i < d.pixel_count(); ++i) {
      worst = std::max(worst, std::abs(back.values()[i] - d.values()[i]) / d.values()[i]);
    }
  }
  out.require(worst <= 1e-12, fmt("round trip rel err %.3g", worst));
  const double e5 = depth_error_exact(5.0, 1.0, kitti);
  const double e50 = depth_error_exact(50.0, 1.0, kitti);
  out.require(std::round(e5 * 1000.0) / 1000.0 == 0.063, fmt("5 m error %.6f", e5));
  out.require(std::round(e50 * 100.0) / 100.0 == 5.69, fmt("50 m error %.6f", e50));
  out.detail = out.pass ? fmt("rel err %.2g; 1 px at 5 m -> %.4f m, at 50 m -> %.4f m", worst, e5, e50)
                        : out.detail;
  return out;
}

// ---------------------------------------------------------------------------
// 2. Reconstruction weights

Outcome weights() {
  Outcome out;
  double worst_sum = 0.0, worst_recon = 0.0, worst_kkt = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t n = 50 + (seed * 37) % 451;  // 50..500
    const auto cloud = oracle::random_cloud(n, 1000 + seed);
    const auto nbrs = build_knn(cloud, 10);
    const auto z = fixture::depths_of(cloud);
    const auto w = solve_weights(z, nbrs);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (double x : w.row_weights(i)) s += x;
      worst_sum = std::max(worst_sum, std::abs(s - 1.0));
      std::vector<double> zn;
      for (auto j : nbrs.row(i)) zn.push_back(z[j]);
      const Eigen::VectorXd ref = oracle::dense_kkt_weights(z[i], zn);
      for (std::size_t j = 0; j < w.k; ++j) {
        worst_kkt = std::max(worst_kkt, std::abs(w.row_weights(i)[j] - ref(static_cast<Eigen::Index>(j))));
      }
    }
    const auto wz = w.apply(z);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      num += (z[i] - wz[i]) * (z[i] - wz[i]);
      den += z[i] * z[i];
    }
    worst_recon = std::max(worst_recon, std::sqrt(num / den));
  }
  out.require(worst_sum <= 1e-8, fmt("row sum off by %.3g", worst_sum));
  out.require(worst_recon <= 1e-6, fmt("reconstruction %.3g", worst_recon));
  out.require(worst_kkt <= 1e-6, fmt("KKT oracle diff %.3g", worst_kkt));
  if (out.pass) {
    out.detail = fmt("200 clouds: |sum-1| %.2g, |Z-WZ|/|Z| %.2g, KKT diff %.2g", worst_sum, worst_recon, worst_kkt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// 3. Landmark-constrained solve against the dense least-squares oracle

Outcome solver_vs_dense() {
  Outcome out;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> offset(-3.0, 3.0);
  double worst = 0.0;
  std::size_t runs = 0;
  for (std::size_t n : {1u, 5u, 25u}) {
    for (std::size_t m : {100u, 250u, 500u}) {
      const std::size_t total = n + m;
      const auto cloud = oracle::random_cloud(total, 77 * n + m);
      const auto z = fixture::depths_of(cloud);
      const auto w = solve_weights(z, build_knn(cloud, 10));
      std::vector<std::pair<std::uint32_t, double>> pins;
      std::vector<std::uint8_t> fixed(total, 0);
      Eigen::VectorXd values = Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(total));
      for (auto i : fixture::pick(total, n, rng)) {
        const double g = z[i] + offset(rng);
        pins.emplace_back(i, g);
        fixed[i] = 1;
        values(i) = g;
      }
      const auto res = correct(fixture::row_depth_map(z), w, fixture::landmarks(total, pins));
      const auto ref = oracle::dense_correction(fixture::dense_weights(w), fixed, values);
      for (std::size_t i = 0; i < total; ++i) {
        worst = std::max(worst, std::abs(res.depths[i] - ref(static_cast<Eigen::Index>(i))));
      }
      for (const auto& [i, g] : pins) out.require(res.depths[i] == g, "landmark depth not exact");
      out.require(res.converged, fmt("solver did not converge (n=%g, m=%g)", double(n), double(m)));
      ++runs;
    }
  }
  out.require(worst <= 1e-6, fmt("max |Z' - oracle| %.3g", worst));
  if (out.pass) out.detail = fmt("%g problems, max |Z' - oracle| %.2g m, landmarks exact", double(runs), worst);
  return out;
}

// ---------------------------------------------------------------------------
// 4. One landmark shifts a uniquely determined graph rigidly

// Random strongly connected graph: a ring plus k-1 random edges per row,
// positive weights normalised to 1. Any such W reproduces a constant depth.
KnnWeights random_stochastic_graph(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  KnnWeights w;
  w.n_points = n;
  w.k = k;
  w.neighbors.resize(n * k);
  w.weights.resize(n * k);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
  std::uniform_real_distribution<double> uw(0.05, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::uint32_t> nb{static_cast<std::uint32_t>((i + 1) % n)};
    while (nb.size() < k) {
      const auto j = pick(rng);
      if (j != i && std::find(nb.begin(), nb.end(), j) == nb.end()) nb.push_back(j);
    }
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      w.neighbors[i * k + j] = nb[j];
      s += (w.weights[i * k + j] = uw(rng));
    }
    for (std::size_t j = 0; j < k; ++j) w.weights[i * k + j] /= s;
  }
  return w;
}

Outcome shift_theorem() {
  Outcome out;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> uz(5.0, 60.0), ud(-4.0, 4.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const double z0 = uz(rng);
    const double delta = ud(rng);
    std::vector<double> z;
    KnnWeights w;
    if (trial % 2 == 0) {
      // Fronto-parallel patch seen by a camera: the KNN weights of a
      // constant-depth cloud.
      const std::size_t width = 12 + static_cast<std::size_t>(trial % 7);
      const std::size_t height = 8 + static_cast<std::size_t>(trial % 5);
      DepthMap patch(width, height);
      for (std::size_t v = 0; v < height; ++v) {
        for (std::size_t u = 0; u < width; ++u) patch.set(u, v, z0);
      }
      const CameraCalib cam{200.0, 200.0, width / 2.0, height / 2.0, 0.5};
      const auto cloud = backproject(patch, cam);
      z = fixture::depths_of(cloud);
      w = solve_weights(z, build_knn(cloud, 10));
    } else {
      const std::size_t n = 60 + static_cast<std::size_t>(trial) * 4;
      w = random_stochastic_graph(n, 10, rng);
      z.assign(n, z0);
    }
    const std::size_t n = z.size();
    const auto pin = static_cast<std::uint32_t>(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
    std::vector<std::uint8_t> fixed(n, 0);
    fixed[pin] = 1;
    const auto rank = oracle::free_block_rank(fixture::dense_weights(w), fixed);
    out.require(rank == static_cast<Eigen::Index>(n - 1), "test graph has no unique solution");
    const auto res = correct(fixture::row_depth_map(z), w, fixture::landmarks(n, {{pin, z[pin] + delta}}));
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(res.depths[i] - (z[i] + delta)));
  }
  out.require(worst <= 1e-6, fmt("max |Z' - (Z + delta)| %.3g", worst));
  if (out.pass) out.detail = fmt("50 graphs, max |Z' - (Z + delta)| %.2g m", worst);
  return out;
}

// ---------------------------------------------------------------------------
// 5. End-to-end: a biased object corrected by four beams

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double median_label_error(const DepthMap& pred, const DepthMap& truth, const Grid<std::int16_t>& labels,
                          std::int16_t label) {
  std::vector<double> e;
  for (std::size_t i = 0; i < truth.pixel_count(); ++i) {
    if (labels.data()[i] == label && pred.mask()[i] && truth.mask()[i]) {
      e.push_back(std::abs(pred.values()[i] - truth.values()[i]));
    }
  }
  return e.empty() ? std::nan("") : median_of(e);
}

Outcome end_to_end() {
  Outcome out;
  const SceneSpec spec = demo_scene(1);
  const auto scene = render(spec);
  const DepthMap stereo = corrupt(scene.depth, scene.labels, spec);
  const auto res = gdc_pipeline(stereo, spec.calib, scene.lidar, BeamSelection::four_beam(),
                                spec.lidar.lidar_to_cam);
  out.require(res.applied, "no landmarks matched");
  const DepthMap& fixed = res.corrected.depth_map;
  const double before = median_label_error(stereo, scene.depth, scene.labels, object_label(0));
  const double after = median_label_error(fixed, scene.depth, scene.labels, object_label(0));
  out.require(before >= 1.9, fmt("object error before %.3f m", before));
  out.require(after <= 0.1, fmt("object error after %.3f m", after));

  // Bins that hold at least one landmark pixel (by true depth).
  const auto edges = default_bin_edges();
  const auto rep_before = binned_median_error(stereo, scene.depth, edges);
  const auto rep_after = binned_median_error(fixed, scene.depth, edges);
  std::vector<bool> has_landmark(edges.size() - 1, false);
  const PointCloud lidar_cam = lidar_to_camera(sparsify(scene.lidar, BeamSelection::four_beam()),
                                               spec.lidar.lidar_to_cam);
  const auto lm = match_landmarks(lidar_cam, stereo, spec.calib);
  for (const auto& m : lm.matches) {
    const double t = scene.depth.value(static_cast<std::size_t>(m.pixel.u), static_cast<std::size_t>(m.pixel.v));
    const auto it = std::upper_bound(edges.begin(), edges.end(), t);
    if (it != edges.begin() && it != edges.end()) has_landmark[static_cast<std::size_t>(it - edges.begin()) - 1] = true;
  }
  std::size_t checked = 0;
  for (std::size_t b = 0; b < has_landmark.size(); ++b) {
    if (!has_landmark[b]) continue;
    ++checked;
    out.require(rep_after.median_abs_error[b] < rep_before.median_abs_error[b],
                fmt("bin [%g, %g) not reduced", edges[b], edges[b + 1]));
  }
  out.require(checked > 0, "no bin contains a landmark");
  if (out.pass) {
    out.detail = fmt("object median error %.3f -> %.4f m", before, after) +
                 fmt(", %g landmarks, %g landmark bins all reduced", double(res.stats.landmarks), double(checked));
  }
  return out;
}

// ---------------------------------------------------------------------------
// 6. Far-range improvement under depth-squared stereo error

Outcome far_range_trend() {
  Outcome out;
  SceneSpec spec;
  spec.camera_height_m = 0.0;
  spec.background_depth_m = 72.0;
  spec.seed = 6;
  spec.corruption.noise_sigma_per_m2 = 2e-4;
  const double bias_per_m2 = 1e-3;
  // Eight objects side by side, each filling a 40-pixel column slot.
  const double depths[] = {32.0, 37.0, 42.0, 47.0, 52.0, 57.0, 62.0, 67.0};
  for (int i = 0; i < 8; ++i) {
    const double z = depths[i];
    const double u0 = 40.0 * i + 1.0, u1 = 40.0 * (i + 1) - 1.0;
    const double x0 = (u0 - spec.calib.c_u) * z / spec.calib.f_u;
    const double x1 = (u1 - spec.calib.c_u) * z / spec.calib.f_u;
    const double sign = i % 2 ? -1.0 : 1.0;
    spec.objects.push_back({x0, x1, -0.1 * z, 0.1 * z, z, 100u + static_cast<std::uint64_t>(i), 0.0,
                            sign * bias_per_m2 * z * z});
  }
  const auto scene = render(spec);
  const DepthMap stereo = corrupt(scene.depth, scene.labels, spec);
  const auto res = gdc_pipeline(stereo, spec.calib, scene.lidar, BeamSelection::four_beam(),
                                spec.lidar.lidar_to_cam);
  out.require(res.applied, "no landmarks matched");
  const auto edges = default_bin_edges();
  const auto before = binned_median_error(stereo, scene.depth, edges);
  const auto after = binned_median_error(res.corrected.depth_map, scene.depth, edges);
  std::size_t checked = 0;
  std::string summary;
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    if (edges[b] < 30.0 || before.counts[b] < 100 || after.counts[b] < 100) continue;
    ++checked;
    out.require(after.median_abs_error[b] < before.median_abs_error[b],
                fmt("bin [%g, %g) not reduced", edges[b], edges[b + 1]));
    summary += fmt(" %g:%.2f->%.2f", edges[b], before.median_abs_error[b], after.median_abs_error[b]);
  }
  out.require(checked >= 7, fmt("only %g far bins populated", double(checked)));
  if (out.pass) out.detail = fmt("%g bins >= 30 m reduced;", double(checked)) + summary;
  return out;
}

// ---------------------------------------------------------------------------
// 7. Cost volume: knot exactness, integer disparity, depth soft-argmax

Outcome cost_volume() {
  Outcome out;
  const CameraCalib calib{200.0, 200.0, 160.0, 48.0, 0.5};  // f b = 100

  // Knots: depths 100 / d copy disparity scores bit for bit.
  {
    std::vector<double> dg(64);
    for (std::size_t i = 0; i < dg.size(); ++i) dg[i] = static_cast<double>(i);
    CostVolume disp(32, 8, GridKind::kDisparity, dg);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<float> s(-1e4f, 0.f);
    for (auto& x : disp.scores()) x = s(rng);
    std::vector<double> zg;
    for (int d = 63; d >= 1; --d) zg.push_back(100.0 / d);
    const auto dv = remap_to_depth_volume(disp, calib, zg);
    bool exact = true;
    for (std::size_t v = 0; v < 8; ++v) {
      for (std::size_t u = 0; u < 32; ++u) {
        for (std::size_t k = 0; k < zg.size(); ++k) {
          exact &= std::bit_cast<std::uint32_t>(dv.score(u, v, k)) ==
                   std::bit_cast<std::uint32_t>(disp.score(u, v, 63 - k));
        }
      }
    }
    out.require(exact, "remap is not bit-exact at knots");
  }

  // Shifted random texture: three vertical bands at disparities 5, 17, 40.
  double shift_rate = 0.0;
  {
    const std::size_t w = 320, h = 96;
    const int win = 9, r = win / 2;
    const int band_d[] = {5, 17, 40};
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> px(0, 255);
    GrayImage left(w, h), right(w, h);
    for (auto& x : left.data()) x = static_cast<std::uint8_t>(px(rng));
    for (auto& x : right.data()) x = static_cast<std::uint8_t>(px(rng));
    auto band_of = [](std::size_t u) { return u < 100 ? 0 : (u < 200 ? 1 : 2); };
    for (std::size_t v = 0; v < h; ++v) {
      for (std::size_t u = 0; u < w; ++u) {
        const auto ur = u + static_cast<std::size_t>(band_d[band_of(u)]);
        if (ur < w) right(ur, v) = left(u, v);
      }
    }
    const auto vol = build_disparity_volume(left, right, {63, win, +1});
    const auto best = oracle::hard_argmax(vol);
    std::size_t ok = 0, n = 0;
    for (std::size_t v = static_cast<std::size_t>(r); v + static_cast<std::size_t>(r) < h; ++v) {
      for (std::size_t u = static_cast<std::size_t>(r); u + static_cast<std::size_t>(r) < w; ++u) {
        const int d = band_d[band_of(u)];
        // Interior: the whole window lies in one band and its match is in
        // the image and was written by this band.
        if (band_of(u - static_cast<std::size_t>(r)) != band_of(u + static_cast<std::size_t>(r))) continue;
        if (u + static_cast<std::size_t>(r + d) >= w) continue;
        const std::size_t lo = u - static_cast<std::size_t>(r) + static_cast<std::size_t>(d);
        const std::size_t hi = u + static_cast<std::size_t>(r) + static_cast<std::size_t>(d);
        bool clean = true;
        for (std::size_t x = lo; x <= hi; ++x) {
          // A later band may overwrite right-image columns of this one.
          for (int b = band_of(u) + 1; b < 3; ++b) {
            const std::size_t first = b == 1 ? 100 : 200;
            if (x >= first + static_cast<std::size_t>(band_d[b]) && x < first + 100 + static_cast<std::size_t>(band_d[b])) clean = false;
          }
        }
        if (!clean) continue;
        ++n;
        ok += best[v * w + u] == static_cast<std::size_t>(d);
      }
    }
    shift_rate = n ? static_cast<double>(ok) / static_cast<double>(n) : 0.0;
    out.require(n > 10000, "too few interior pixels");
    out.require(shift_rate >= 0.99, fmt("integer disparity recovered at %.4f", shift_rate));
  }

  // Rendered fronto-parallel planes at 10, 20, 25 and 50 m.
  double plane_rate = 0.0;
  double plane_worst = 0.0;
  double seconds = 0.0;
  {
    SceneSpec spec;
    spec.camera_height_m = 0.0;
    spec.background_depth_m = 50.0;
    spec.objects.push_back({-3.6, -1.2, -1.0, 1.0, 10.0, 21, 0.0, 0.0});
    spec.objects.push_back({-4.0, 0.4, -2.0, 2.0, 20.0, 22, 0.0, 0.0});
    spec.objects.push_back({2.0, 12.0, -3.0, 3.0, 25.0, 23, 0.0, 0.0});
    const auto scene = render(spec);
    const auto t0 = std::chrono::steady_clock::now();
    const auto disp = build_disparity_volume(scene.left, scene.right, {63, 9, +1});
    const auto depth = soft_argmax_depth(remap_to_depth_volume(disp, spec.calib, make_depth_grid()));
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const long r = 4 + 1;
    std::size_t ok = 0, n = 0;
    for (long v = r; v + r < static_cast<long>(spec.height); ++v) {
      for (long u = r; u + r + 63 < static_cast<long>(spec.width); ++u) {
        // Interior: every pixel the window and its match touch shows the
        // same surface in both views.
        const auto label = scene.labels(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
        const double z = scene.depth.value(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
        const long d = std::lround(100.0 / z);
        bool interior = true;
        for (long j = -r; j <= r && interior; ++j) {
          for (long i = -r; i <= r + d && interior; ++i) {
            interior = scene.labels(static_cast<std::size_t>(u + i), static_cast<std::size_t>(v + j)) == label;
          }
        }
        if (!interior) continue;
        ++n;
        const double err = std::abs(depth.value(static_cast<std::size_t>(u), static_cast<std::size_t>(v)) - z);
        plane_worst = std::max(plane_worst, err);
        ok += err <= 1.0;
      }
    }
    plane_rate = n ? static_cast<double>(ok) / static_cast<double>(n) : 0.0;
    out.require(n > 5000, "too few plane pixels");
    out.require(plane_rate == 1.0, fmt("depth within one grid step at %.4f (worst %.3f m)", plane_rate, plane_worst));
    out.require(seconds < 30.0, fmt("volume + readout took %.1f s", seconds));
  }
  if (out.pass) {
    out.detail = fmt("knots bit-exact; disparity hit rate %.4f; plane depth within 1 m at %.4f", shift_rate,
                     plane_rate) +
                 fmt(" (64 disparities at 320x96 in %.2f s)", seconds);
  }
  return out;
}

// ---------------------------------------------------------------------------
// 8. Beam sparsification presets

Outcome beam_presets() {
  Outcome out;
  const auto dense = BeamSelection::all_beams();
  // Bin index from the bottom (-23.6 deg) for each preset interval.
  const std::vector<int> want4{53, 55, 57, 59};
  const std::vector<int> want2{53, 57};
  std::vector<int> got4, got2;
  const double deg = std::numbers::pi / 180.0;
  for (int b = 0; b < BeamSelection::kDenseBeamCount; ++b) {
    const double el = dense.bin_center_deg(b) * deg;
    LidarScan rays;
    for (double az : {-40.0, -10.0, 0.0, 25.0, 44.0}) {
      for (double range : {3.0, 20.0, 79.0}) {
        rays.points.push_back({static_cast<float>(range * std::cos(el) * std::cos(az * deg)),
                               static_cast<float>(range * std::cos(el) * std::sin(az * deg)),
                               static_cast<float>(range * std::sin(el)), 0.f});
      }
    }
    const auto s4 = sparsify(rays, BeamSelection::four_beam()).size();
    const auto s2 = sparsify(rays, BeamSelection::two_beam()).size();
    out.require(s4 == 0 || s4 == rays.size(), "a bin split across the 4-beam boundary");
    out.require(s2 == 0 || s2 == rays.size(), "a bin split across the 2-beam boundary");
    if (s4 == rays.size()) got4.push_back(b);
    if (s2 == rays.size()) got2.push_back(b);
  }
  out.require(got4 == want4, "4-beam preset routes the wrong bins");
  out.require(got2 == want2, "2-beam preset routes the wrong bins");

  // 2-beam subset of 4-beam on arbitrary scans, including a rendered one.
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> c(-80.f, 80.f);
  std::vector<LidarScan> scans;
  for (int t = 0; t < 20; ++t) {
    LidarScan s;
    for (int i = 0; i < 5000; ++i) s.points.push_back({c(rng), c(rng), c(rng) * 0.05f, 0.f});
    scans.push_back(std::move(s));
  }
  scans.push_back(render(demo_scene(8)).lidar);
  for (const auto& s : scans) {
    const auto four = sparsify(s, BeamSelection::four_beam());
    const auto two = sparsify(s, BeamSelection::two_beam());
    out.require(sparsify(four, BeamSelection::two_beam()) == two, "2-beam not a subset of 4-beam");
  }
  if (out.pass) out.detail = "bin centres route to [-2.4,-2.0) [-1.6,-1.2) [-0.8,-0.4) [0.0,0.4); 2-beam subset on 21 scans";
  return out;
}

// ---------------------------------------------------------------------------
// 9. KITTI-format I/O

Outcome kitti_io() {
  Outcome out;
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "depthcorr_acceptance";
  fs::create_directories(dir);
  std::mt19937_64 rng(9);

  std::uniform_real_distribution<float> c(-100.f, 100.f);
  LidarScan scan;
  for (int i = 0; i < 20000; ++i) scan.points.push_back({c(rng), c(rng), c(rng), c(rng) / 100.f});
  save_velodyne_bin((dir / "scan.bin").string(), scan);
  const auto back = load_velodyne_bin((dir / "scan.bin").string());
  out.require(back.size() == scan.size() &&
                  std::memcmp(back.points.data(), scan.points.data(), scan.size() * sizeof(LidarPoint)) == 0,
              "velodyne round trip not bit-exact");

  std::uniform_int_distribution<int> code(0, 65535);
  Grid<std::uint16_t> g(1242, 375);
  for (auto& x : g.data()) x = static_cast<std::uint16_t>(code(rng));
  const DepthMap depth = decode_depth_png16(g);
  save_depth_png((dir / "depth.png").string(), depth);
  const auto png_back = load_png16((dir / "depth.png").string());
  out.require(png_back == g, "16-bit PNG round trip not bit-exact");
  out.require(load_depth_png((dir / "depth.png").string()) == depth, "depth map round trip differs");

  std::uniform_real_distribution<double> uf(300.0, 1500.0), ub(0.1, 1.5), uc(100.0, 700.0);
  double worst_f = 0.0, worst_b = 0.0;
  for (int t = 0; t < 100; ++t) {
    const double f = uf(rng), b = ub(rng), cu = uc(rng), cv = uc(rng) / 2;
    // Object-benchmark style pair: both rows carry a small extra x offset.
    const double tx2 = 0.06 * f;
    std::ostringstream text;
    text.precision(17);
    text << "P2: " << f << " 0 " << cu << ' ' << tx2 << " 0 " << f << ' ' << cv << " 0 0 0 1 0\n";
    text << "P3: " << f << " 0 " << cu << ' ' << tx2 - f * b << " 0 " << f << ' ' << cv << " 0 0 0 1 0\n";
    std::istringstream in(text.str());
    const auto calib = parse_kitti_calib(in);
    worst_f = std::max(worst_f, std::abs(calib.camera.f_u - f));
    worst_b = std::max(worst_b, std::abs(calib.camera.baseline_m - b));
  }
  out.require(worst_f <= 1e-9 && worst_b <= 1e-9, fmt("calib recovery f %.3g, b %.3g", worst_f, worst_b));
  if (out.pass) out.detail = fmt("bin and PNG bit-exact; calib |df| %.2g, |db| %.2g", worst_f, worst_b);
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "disparity/depth algebra", 1.0, depth_algebra},
      {2, "reconstruction weights", 30.0, weights},
      {3, "constrained solve vs dense oracle", 60.0, solver_vs_dense},
      {4, "single-landmark shift", 10.0, shift_theorem},
      {5, "end-to-end bias correction", 60.0, end_to_end},
      {6, "far-range improvement", 60.0, far_range_trend},
      {7, "cost-volume remap", 30.0, cost_volume},
      {8, "beam sparsification", 10.0, beam_presets},
      {9, "KITTI-format I/O", 10.0, kitti_io},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      if (o.pass) o.detail = fmt("took %.1f s, budget %.0f s", secs, c.budget_s);
      o.pass = false;
    }
    std::printf("%s  %d. %-34s %6.2fs  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
