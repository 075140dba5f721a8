#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "priorslam/scene.hpp"

namespace priorslam {

struct Checkpoint {
  Scene scene;
  double truncation = 0.08;
  /// Mesh resolution used at save time (meters).
  double mesh_resolution = 0.02;
  std::vector<PoseParams> poses;
};

/// Single file: magic line `PSCKPT1`, a little-endian u64 manifest length, a
/// JSON manifest (scene geometry plus one entry per group: name, dtype, shape,
/// count), then the raw group arrays in manifest order. Parameter groups are
/// stored as 32-bit floats, lattice keys as 32-bit ints.
void save_checkpoint(const std::filesystem::path& path, const Scene& scene, double truncation, double mesh_resolution,
                     std::span<const PoseParams> poses);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace priorslam
