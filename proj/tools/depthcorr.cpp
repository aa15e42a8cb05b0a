// depthcorr: command-line front end.
//
//   depthcorr synth    --out DIR [--seed N]
//   depthcorr stereo   --left PNG --right PNG --calib TXT --out PNG
//   depthcorr sparsify --in BIN --beams {2|4|64|custom} --out BIN
//   depthcorr correct  --depth PNG --calib TXT --velodyne BIN --beams {2|4|64|custom}
//                      --k INT --tol FLOAT --out PNG
//   depthcorr eval     --pred PNG (--truth PNG | --velodyne BIN --calib TXT) --csv FILE

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "depthcorr/cost_volume.hpp"
#include "depthcorr/eval.hpp"
#include "depthcorr/gdc.hpp"
#include "depthcorr/kitti_io.hpp"
#include "depthcorr/png_io.hpp"
#include "depthcorr/scene_io.hpp"
#include "depthcorr/synth.hpp"

namespace {

using namespace depthcorr;

constexpr int kExitNotConverged = 2;

// "lo:hi,lo:hi" in degrees.
std::vector<AngleInterval> parse_intervals(const std::string& text) {
  std::vector<AngleInterval> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("bad interval: " + item);
    out.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
  }
  return out;
}

// Returns nullopt for the dense scan (no sparsification).
std::optional<BeamSelection> beam_selection(const std::string& beams, const std::string& intervals) {
  if (beams == "64") return std::nullopt;
  if (beams == "4") return BeamSelection::four_beam();
  if (beams == "2") return BeamSelection::two_beam();
  BeamSelection sel;
  sel.intervals = parse_intervals(intervals);
  sel.validate();
  return sel;
}

std::vector<double> parse_edges(const std::string& text) {
  std::vector<double> edges;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) edges.push_back(std::stod(item));
  return edges;
}

RigidTransform extrinsics_of(const KittiCalib& calib) {
  return calib.velo_to_cam.value_or(RigidTransform::lidar_axes_to_camera());
}

struct SynthArgs {
  std::string out;
  std::uint64_t seed = 1;
};

int run_synth(const SynthArgs& a) {
  const SceneSpec spec = demo_scene(a.seed);
  const RenderedScene scene = render(spec);
  const DepthMap stereo = corrupt(scene.depth, scene.labels, spec);
  const ScenePaths paths = save_scene(a.out, spec, scene, stereo);
  std::cout << "scene " << spec.width << "x" << spec.height << ", " << scene.lidar.size()
            << " lidar points, " << scene.depth.valid_count() << " depth pixels -> " << a.out << '\n';
  (void)paths;
  return 0;
}

struct StereoArgs {
  std::string left, right, calib, out, dump;
  int max_disparity = 191;
  int window = 9;
  int right_offset_sign = 1;
  double min_depth = 1.0, max_depth = 80.0, depth_step = 1.0;
};

int run_stereo(const StereoArgs& a) {
  const GrayImage left = load_gray_png(a.left);
  const GrayImage right = load_gray_png(a.right);
  const KittiCalib calib = load_kitti_calib(a.calib);
  const CostVolume disp =
      build_disparity_volume(left, right, {a.max_disparity, a.window, a.right_offset_sign});
  const CostVolume depth_vol =
      remap_to_depth_volume(disp, calib.camera, make_depth_grid(a.min_depth, a.max_depth, a.depth_step));
  if (!a.dump.empty()) save_volume_raw(a.dump, depth_vol);
  const DepthMap depth = soft_argmax_depth(depth_vol);
  save_depth_png(a.out, depth);
  std::cout << "depth volume " << depth_vol.width() << "x" << depth_vol.height() << "x"
            << depth_vol.levels() << " -> " << a.out << '\n';
  return 0;
}

struct SparsifyArgs {
  std::string in, out, beams = "4", intervals;
};

int run_sparsify(const SparsifyArgs& a) {
  const LidarScan scan = load_velodyne_bin(a.in);
  const auto sel = beam_selection(a.beams, a.intervals);
  const LidarScan sparse = sel ? sparsify(scan, *sel) : scan;
  save_velodyne_bin(a.out, sparse);
  std::cout << scan.size() << " -> " << sparse.size() << " points\n";
  return 0;
}

struct CorrectArgs {
  std::string depth, calib, velodyne, out, beams = "4", intervals, weights_out;
  std::size_t k = 10;
  double tol = 1e-8;
  std::size_t max_iter = 0;
};

int run_correct(const CorrectArgs& a) {
  const DepthMap depth = load_depth_png(a.depth);
  const KittiCalib calib = load_kitti_calib(a.calib);
  const LidarScan scan = load_velodyne_bin(a.velodyne);
  const auto sel = beam_selection(a.beams, a.intervals);
  GdcOptions opts;
  opts.k = a.k;
  opts.solve.tol = a.tol;
  opts.solve.max_iter = a.max_iter;
  // 64 beams: use every return. An interval spanning all elevations keeps
  // the pipeline a single code path.
  BeamSelection everything{-90.0, 0.4, {{-90.0, 90.0}}};
  const GdcResult res =
      gdc_pipeline(depth, calib.camera, scan, sel.value_or(everything), extrinsics_of(calib), opts);

  const auto& s = res.stats;
  std::cout << "scan points:        " << s.scan_points << '\n'
            << "after sparsify:     " << s.sparse_points << '\n'
            << "in front of camera: " << s.camera_points << '\n'
            << "stereo points:      " << s.stereo_points << '\n'
            << "landmarks:          " << s.landmarks << '\n'
            << "degenerate rows:    " << s.degenerate_rows << '\n';
  if (s.k_clamped) std::cout << "warning: k clamped to point count - 1\n";
  if (!res.applied) std::cout << "no landmarks matched; depth left uncorrected\n";
  std::cout << "residual:           " << res.corrected.initial_residual << " -> "
            << res.corrected.residual << " in " << res.corrected.iterations << " iterations"
            << (res.corrected.converged ? "" : " (NOT converged)") << '\n';
  save_depth_png(a.out, res.corrected.depth_map);
  if (!a.weights_out.empty()) {
    const PointCloud stereo = backproject(depth, calib.camera);
    const KnnWeights w = solve_weights(stereo, build_knn(stereo, a.k), opts.weights);
    std::ofstream f(a.weights_out);
    write_weight_triplets(f, w);
  }
  return res.corrected.converged ? 0 : kExitNotConverged;
}

struct EvalArgs {
  std::string pred, truth, baseline, velodyne, calib, csv, svg, bins;
};

int run_eval(const EvalArgs& a) {
  const DepthMap pred = load_depth_png(a.pred);
  DepthMap truth;
  if (!a.truth.empty()) {
    truth = load_depth_png(a.truth);
  } else {
    if (a.velodyne.empty() || a.calib.empty()) {
      throw std::invalid_argument("eval: give --truth, or --velodyne with --calib");
    }
    const KittiCalib calib = load_kitti_calib(a.calib);
    const PointCloud cam = lidar_to_camera(load_velodyne_bin(a.velodyne), extrinsics_of(calib));
    truth = lidar_depth_map(cam, calib.camera, pred.width(), pred.height());
  }
  const auto edges = a.bins.empty() ? default_bin_edges() : parse_edges(a.bins);
  std::vector<ReportSeries> series;
  if (!a.baseline.empty()) {
    series.push_back({"baseline", binned_median_error(load_depth_png(a.baseline), truth, edges)});
    std::cout << "baseline: " << a.baseline << '\n';
    write_report_table(std::cout, series.back().report);
    std::cout << '\n';
  }
  series.push_back({"prediction", binned_median_error(pred, truth, edges)});
  std::cout << "prediction: " << a.pred << '\n';
  write_report_table(std::cout, series.back().report);
  if (!a.csv.empty()) {
    std::ofstream f(a.csv);
    write_report_csv(f, series.back().report);
  }
  if (!a.svg.empty()) {
    std::ofstream f(a.svg);
    write_report_svg(f, series);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stereo depth correction with sparse LiDAR"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic KITTI-layout scene");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "Scene seed");

  StereoArgs stereo;
  auto* stereo_cmd = app.add_subcommand("stereo", "SAD depth cost volume + soft-argmax");
  stereo_cmd->add_option("--left", stereo.left)->required()->check(CLI::ExistingFile);
  stereo_cmd->add_option("--right", stereo.right)->required()->check(CLI::ExistingFile);
  stereo_cmd->add_option("--calib", stereo.calib)->required()->check(CLI::ExistingFile);
  stereo_cmd->add_option("--out", stereo.out, "Depth PNG")->required();
  stereo_cmd->add_option("--max-disparity", stereo.max_disparity);
  stereo_cmd->add_option("--window", stereo.window);
  stereo_cmd->add_option("--right-offset-sign", stereo.right_offset_sign,
                         "+1: left u matches right u+d; -1: u-d")
      ->check(CLI::IsMember({-1, 1}));
  stereo_cmd->add_option("--min-depth", stereo.min_depth);
  stereo_cmd->add_option("--max-depth", stereo.max_depth);
  stereo_cmd->add_option("--depth-step", stereo.depth_step);
  stereo_cmd->add_option("--dump-volume", stereo.dump, "Raw float32 depth volume");

  SparsifyArgs sp;
  auto* sp_cmd = app.add_subcommand("sparsify", "Keep selected LiDAR beams");
  sp_cmd->add_option("--in", sp.in)->required()->check(CLI::ExistingFile);
  sp_cmd->add_option("--out", sp.out)->required();
  sp_cmd->add_option("--beams", sp.beams)->check(CLI::IsMember({"2", "4", "64", "custom"}));
  sp_cmd->add_option("--intervals", sp.intervals, "custom: lo:hi,lo:hi (degrees)");

  CorrectArgs cr;
  auto* cr_cmd = app.add_subcommand("correct", "Graph-based depth correction");
  cr_cmd->add_option("--depth", cr.depth, "16-bit depth PNG")->required()->check(CLI::ExistingFile);
  cr_cmd->add_option("--calib", cr.calib)->required()->check(CLI::ExistingFile);
  cr_cmd->add_option("--velodyne", cr.velodyne)->required()->check(CLI::ExistingFile);
  cr_cmd->add_option("--beams", cr.beams)->check(CLI::IsMember({"2", "4", "64", "custom"}));
  cr_cmd->add_option("--intervals", cr.intervals, "custom: lo:hi,lo:hi (degrees)");
  cr_cmd->add_option("--k", cr.k)->check(CLI::PositiveNumber);
  cr_cmd->add_option("--tol", cr.tol)->check(CLI::PositiveNumber);
  cr_cmd->add_option("--max-iter", cr.max_iter, "0 = 10 x free points");
  cr_cmd->add_option("--out", cr.out, "Corrected depth PNG")->required();
  cr_cmd->add_option("--weights-out", cr.weights_out, "Write W as row/col/weight triplets");

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "Binned median depth error");
  ev_cmd->add_option("--pred", ev.pred)->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--truth", ev.truth)->check(CLI::ExistingFile);
  ev_cmd->add_option("--velodyne", ev.velodyne, "LiDAR ground truth")->check(CLI::ExistingFile);
  ev_cmd->add_option("--calib", ev.calib)->check(CLI::ExistingFile);
  ev_cmd->add_option("--baseline", ev.baseline, "Second depth map to compare")->check(CLI::ExistingFile);
  ev_cmd->add_option("--bins", ev.bins, "Comma-separated bin edges in meters");
  ev_cmd->add_option("--csv", ev.csv);
  ev_cmd->add_option("--svg", ev.svg);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) return run_synth(synth);
    if (*stereo_cmd) return run_stereo(stereo);
    if (*sp_cmd) return run_sparsify(sp);
    if (*cr_cmd) return run_correct(cr);
    if (*ev_cmd) return run_eval(ev);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
