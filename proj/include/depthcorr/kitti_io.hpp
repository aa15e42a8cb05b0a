#pragma once

// KITTI file formats: calibration text files and velodyne .bin scans.

#include <array>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "depthcorr/geometry.hpp"
#include "depthcorr/lidar_sim.hpp"

namespace depthcorr {

struct KittiCalib {
  CameraCalib camera;
  // R0_rect * Tr_velo_to_cam when the file has them.
  std::optional<RigidTransform> velo_to_cam;
};

namespace detail {

inline std::map<std::string, std::vector<double>> parse_key_values(std::istream& in) {
  std::map<std::string, std::vector<double>> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string key = line.substr(0, colon);
    while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
    std::istringstream values(line.substr(colon + 1));
    std::vector<double> v;
    double x;
    while (values >> x) v.push_back(x);
    // calib_time and similar non-numeric entries come back empty; ignore them.
    if (!v.empty()) out[key] = std::move(v);
  }
  return out;
}

inline const std::vector<double>* find_any(const std::map<std::string, std::vector<double>>& kv,
                                           std::initializer_list<const char*> keys,
                                           std::size_t count) {
  for (const char* k : keys) {
    auto it = kv.find(k);
    if (it != kv.end() && it->second.size() == count) return &it->second;
  }
  return nullptr;
}

}  // namespace detail

// Intrinsics come from P2; the baseline from the P2/P3 translation
// difference, b = (P2[0,3] - P3[0,3]) / f_u.
inline KittiCalib parse_kitti_calib(std::istream& in) {
  const auto kv = detail::parse_key_values(in);
  const auto* p2 = detail::find_any(kv, {"P2", "P_rect_02"}, 12);
  const auto* p3 = detail::find_any(kv, {"P3", "P_rect_03"}, 12);
  if (p2 == nullptr || p3 == nullptr) {
    throw std::runtime_error("kitti calib: P2/P3 projection matrices not found");
  }
  KittiCalib calib;
  calib.camera.f_u = (*p2)[0];
  calib.camera.c_u = (*p2)[2];
  calib.camera.f_v = (*p2)[5];
  calib.camera.c_v = (*p2)[6];
  calib.camera.baseline_m = ((*p2)[3] - (*p3)[3]) / calib.camera.f_u;
  calib.camera.validate();

  if (const auto* tr = detail::find_any(kv, {"Tr_velo_to_cam", "Tr_velo_cam"}, 12)) {
    std::array<double, 12> m{};
    std::copy(tr->begin(), tr->end(), m.begin());
    RigidTransform velo = RigidTransform::from_3x4(m);
    if (const auto* r0 = detail::find_any(kv, {"R0_rect", "R_rect_00", "R_rect"}, 9)) {
      RigidTransform rect;
      std::copy(r0->begin(), r0->end(), rect.rotation.begin());
      velo = rect.compose(velo);
    }
    calib.velo_to_cam = velo;
  }
  return calib;
}

inline KittiCalib load_kitti_calib(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open calib file: " + path);
  return parse_kitti_calib(in);
}

// Writes an object-benchmark style calib file for a rectified pair: P2 is
// the reference camera and P3 carries -f_u * b as its x translation.
inline void write_kitti_calib(std::ostream& out, const CameraCalib& cam,
                              const RigidTransform& velo_to_cam) {
  auto row = [&](const char* key, std::initializer_list<double> values) {
    out << key << ':';
    for (double v : values) out << ' ' << std::setprecision(17) << v;
    out << '\n';
  };
  const double tx3 = -cam.f_u * cam.baseline_m;
  row("P0", {cam.f_u, 0, cam.c_u, 0, 0, cam.f_v, cam.c_v, 0, 0, 0, 1, 0});
  row("P1", {cam.f_u, 0, cam.c_u, tx3, 0, cam.f_v, cam.c_v, 0, 0, 0, 1, 0});
  row("P2", {cam.f_u, 0, cam.c_u, 0, 0, cam.f_v, cam.c_v, 0, 0, 0, 1, 0});
  row("P3", {cam.f_u, 0, cam.c_u, tx3, 0, cam.f_v, cam.c_v, 0, 0, 0, 1, 0});
  row("R0_rect", {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const auto& r = velo_to_cam.rotation;
  const auto& t = velo_to_cam.translation;
  row("Tr_velo_to_cam", {r[0], r[1], r[2], t[0], r[3], r[4], r[5], t[1], r[6], r[7], r[8], t[2]});
  row("Tr_imu_to_velo", {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0});
}

inline void save_kitti_calib(const std::string& path, const CameraCalib& cam,
                             const RigidTransform& velo_to_cam) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write calib file: " + path);
  write_kitti_calib(out, cam, velo_to_cam);
}

namespace detail {

inline std::uint32_t to_little_endian(std::uint32_t x) {
  if constexpr (std::endian::native == std::endian::little) {
    return x;
  } else {
    return ((x & 0xffu) << 24) | ((x & 0xff00u) << 8) | ((x >> 8) & 0xff00u) | (x >> 24);
  }
}

}  // namespace detail

// Velodyne scans: headerless little-endian float32 (x, y, z, reflectance).
inline LidarScan read_velodyne_bin(std::istream& in) {
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 16 != 0) {
    throw std::runtime_error("velodyne bin: size is not a multiple of 16 bytes");
  }
  LidarScan scan;
  scan.points.resize(bytes.size() / 16);
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    float f[4];
    for (int c = 0; c < 4; ++c) {
      std::uint32_t raw;
      std::memcpy(&raw, bytes.data() + i * 16 + c * 4, 4);
      raw = detail::to_little_endian(raw);
      f[c] = std::bit_cast<float>(raw);
    }
    scan.points[i] = {f[0], f[1], f[2], f[3]};
  }
  return scan;
}

inline LidarScan load_velodyne_bin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open velodyne file: " + path);
  return read_velodyne_bin(in);
}

inline void write_velodyne_bin(std::ostream& out, const LidarScan& scan) {
  for (const auto& p : scan.points) {
    for (float f : {p.x, p.y, p.z, p.reflectance}) {
      const std::uint32_t raw = detail::to_little_endian(std::bit_cast<std::uint32_t>(f));
      out.write(reinterpret_cast<const char*>(&raw), 4);
    }
  }
}

inline void save_velodyne_bin(const std::string& path, const LidarScan& scan) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write velodyne file: " + path);
  write_velodyne_bin(out, scan);
}

}  // namespace depthcorr
