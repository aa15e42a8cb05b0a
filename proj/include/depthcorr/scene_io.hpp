#pragma once

// Writes a synthetic scene in the KITTI object-benchmark directory layout:
//
//   image_2/000000.png       first view (8-bit gray)
//   image_3/000000.png       second view
//   velodyne/000000.bin      64-beam scan
//   calib/000000.txt         P0..P3, R0_rect, Tr_velo_to_cam
//   depth_gt/000000.png      exact depth, 16-bit, value / 256 = meters
//   depth_stereo/000000.png  corrupted depth standing in for stereo output

#include <filesystem>
#include <string>

#include "depthcorr/kitti_io.hpp"
#include "depthcorr/png_io.hpp"
#include "depthcorr/synth.hpp"

namespace depthcorr {

struct ScenePaths {
  std::filesystem::path left, right, velodyne, calib, depth_gt, depth_stereo;

  explicit ScenePaths(const std::filesystem::path& root, const std::string& frame = "000000")
      : left(root / "image_2" / (frame + ".png")),
        right(root / "image_3" / (frame + ".png")),
        velodyne(root / "velodyne" / (frame + ".bin")),
        calib(root / "calib" / (frame + ".txt")),
        depth_gt(root / "depth_gt" / (frame + ".png")),
        depth_stereo(root / "depth_stereo" / (frame + ".png")) {}
};

inline ScenePaths save_scene(const std::filesystem::path& root, const SceneSpec& spec,
                             const RenderedScene& scene, const DepthMap& stereo_depth) {
  const ScenePaths paths(root);
  for (const auto* p : {&paths.left, &paths.right, &paths.velodyne, &paths.calib, &paths.depth_gt,
                        &paths.depth_stereo}) {
    std::filesystem::create_directories(p->parent_path());
  }
  save_gray_png(paths.left.string(), scene.left);
  save_gray_png(paths.right.string(), scene.right);
  save_velodyne_bin(paths.velodyne.string(), scene.lidar);
  save_kitti_calib(paths.calib.string(), spec.calib, spec.lidar.lidar_to_cam);
  save_depth_png(paths.depth_gt.string(), scene.depth);
  save_depth_png(paths.depth_stereo.string(), stereo_depth);
  return paths;
}

}  // namespace depthcorr
