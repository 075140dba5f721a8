#pragma once

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "priorslam/diffcore.hpp"
#include "priorslam/frame_io.hpp"
#include "priorslam/log.hpp"
#include "priorslam/types.hpp"

namespace testutil {

using namespace priorslam;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline Vec3 random_vec(Rng& rng, double lo = -1.0, double hi = 1.0) {
  return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

inline Vec4 random_quat(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec4 q(n(rng), n(rng), n(rng), n(rng));
  return q / q.norm();
}

inline PoseParams random_pose(Rng& rng, double translation = 1.0) {
  return canonicalize({random_quat(rng), random_vec(rng, -translation, translation)});
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("priorslam_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Camera with a principal point in the image center.
inline Intrinsics small_camera(int w = 40, int h = 30, double f = 30.0) {
  Intrinsics K;
  K.fx = K.fy = f;
  K.cx = w / 2.0;
  K.cy = h / 2.0;
  K.width = w;
  K.height = h;
  return K;
}

/// Frame looking at a fronto-parallel plane at `depth` with a smooth color ramp.
inline Frame plane_frame(const Intrinsics& K, double depth) {
  Frame f;
  f.width = K.width;
  f.height = K.height;
  f.depth.assign(static_cast<std::size_t>(K.width) * K.height, static_cast<float>(depth));
  f.color.resize(f.depth.size() * 3);
  for (int v = 0; v < K.height; ++v) {
    for (int u = 0; u < K.width; ++u) {
      const std::size_t i = (static_cast<std::size_t>(v) * K.width + u) * 3;
      f.color[i] = static_cast<float>(u) / K.width;
      f.color[i + 1] = static_cast<float>(v) / K.height;
      f.color[i + 2] = 0.5f;
    }
  }
  return f;
}

}  // namespace testutil
