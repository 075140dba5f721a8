#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <vector>

#include "priorslam/scene.hpp"

namespace priorslam {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  /// Empty or one RGB in [0,1] per vertex.
  std::vector<Vec3> colors;

  [[nodiscard]] bool empty() const { return triangles.empty(); }
  [[nodiscard]] double area() const;
};

/// SDF of a point evaluated inside a specific allocated voxel (the point may
/// sit on that voxel's boundary).
using VoxelSdf = std::function<double(const VoxelKey& voxel, const Vec3& p)>;

/// Marching cubes at isolevel 0 over a grid of spacing voxel_size / subdivisions,
/// visiting only cells inside allocated voxels. Shared grid samples and edge
/// vertices are evaluated once. Output order is deterministic.
TriangleMesh marching_cubes(const SparseVolume& volume, const VoxelSdf& sdf, int subdivisions = 2);

/// Mesh of the decoded geometry at `resolution` meters (rounded to an integer
/// subdivision of the voxel), with vertex colors from the color branch.
/// An empty volume yields an empty mesh.
TriangleMesh extract_mesh(const Scene& scene, double resolution);

/// Binary little-endian PLY: float x y z [uchar r g b], faces as uchar-counted int lists.
void save_ply(const TriangleMesh& mesh, const std::filesystem::path& path);
TriangleMesh load_ply(const std::filesystem::path& path);

}  // namespace priorslam
