#include "priorslam/mesher.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "mc_tables.hpp"

namespace priorslam {

double TriangleMesh::area() const {
  double a = 0.0;
  for (const auto& t : triangles) {
    a += 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
  }
  return a;
}

namespace {

struct EdgeKey {
  VoxelKey a, b;
  friend bool operator==(const EdgeKey&, const EdgeKey&) = default;
};

struct EdgeKeyHash {
  std::size_t operator()(const EdgeKey& e) const noexcept {
    VoxelKeyHash h;
    return h(e.a) * 31u ^ h(e.b);
  }
};

}  // namespace

TriangleMesh marching_cubes(const SparseVolume& volume, const VoxelSdf& sdf, int subdivisions) {
  using namespace detail;
  TriangleMesh mesh;
  if (volume.empty()) return mesh;
  const int n = std::max(subdivisions, 1);
  const double h = volume.voxel_size() / n;
  std::unordered_map<VoxelKey, double, VoxelKeyHash> samples;
  std::unordered_map<EdgeKey, std::uint32_t, EdgeKeyHash> edge_vertex;

  for (const VoxelKey& voxel : volume.sorted_voxels()) {
    auto sample = [&](const VoxelKey& g) {
      auto it = samples.find(g);
      if (it != samples.end()) return it->second;
      const double v = sdf(voxel, Vec3(g.x, g.y, g.z) * h);
      samples.emplace(g, v);
      return v;
    };
    for (int cx = 0; cx < n; ++cx) {
      for (int cy = 0; cy < n; ++cy) {
        for (int cz = 0; cz < n; ++cz) {
          const VoxelKey base{voxel.x * n + cx, voxel.y * n + cy, voxel.z * n + cz};
          std::array<VoxelKey, 8> corner;
          std::array<double, 8> value;
          int cube = 0;
          for (int c = 0; c < 8; ++c) {
            corner[c] = {base.x + kMcCornerOffsets[c][0], base.y + kMcCornerOffsets[c][1], base.z + kMcCornerOffsets[c][2]};
            value[c] = sample(corner[c]);
            if (value[c] < 0.0) cube |= 1 << c;
          }
          if (kMcEdgeTable[cube] == 0) continue;
          std::array<std::uint32_t, 12> vid{};
          for (int e = 0; e < 12; ++e) {
            if (!(kMcEdgeTable[cube] & (1 << e))) continue;
            int i = kMcEdgeCorners[e][0], j = kMcEdgeCorners[e][1];
            if (corner[j] < corner[i]) std::swap(i, j);
            const EdgeKey key{corner[i], corner[j]};
            auto it = edge_vertex.find(key);
            if (it != edge_vertex.end()) {
              vid[e] = it->second;
              continue;
            }
            const double vi = value[i], vj = value[j];
            const double t = vi == vj ? 0.5 : vi / (vi - vj);
            const Vec3 pi = Vec3(corner[i].x, corner[i].y, corner[i].z) * h;
            const Vec3 pj = Vec3(corner[j].x, corner[j].y, corner[j].z) * h;
            vid[e] = static_cast<std::uint32_t>(mesh.vertices.size());
            mesh.vertices.push_back(pi + std::clamp(t, 0.0, 1.0) * (pj - pi));
            edge_vertex.emplace(key, vid[e]);
          }
          for (const int* tri = kMcTriTable[cube]; *tri != -1; tri += 3) {
            const std::array<std::uint32_t, 3> f{vid[tri[0]], vid[tri[1]], vid[tri[2]]};
            if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) continue;
            const Vec3& a = mesh.vertices[f[0]];
            if ((mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a).squaredNorm() <= 0.0) continue;
            mesh.triangles.push_back(f);
          }
        }
      }
    }
  }
  return mesh;
}

TriangleMesh extract_mesh(const Scene& scene, double resolution) {
  const int n = std::max(1, static_cast<int>(std::lround(scene.volume.voxel_size() / resolution)));
  TriangleMesh mesh = marching_cubes(
      scene.volume,
      [&](const VoxelKey& voxel, const Vec3& p) {
        TrilerpStencil st;
        scene.volume.stencil_in(voxel, p, st);
        return scene.geometry.decode(scene.normalize_point(p), scene.volume.interpolate(st));
      },
      n);
  mesh.colors.reserve(mesh.vertices.size());
  for (const Vec3& v : mesh.vertices) mesh.colors.push_back(scene.color(v));
  return mesh;
}

namespace {

template <typename T>
void put(std::ofstream& out, T v) {
  static_assert(std::endian::native == std::endian::little, "PLY writer assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void save_ply(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write PLY: " + path.string());
  const bool has_color = !mesh.colors.empty();
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << mesh.vertices.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (has_color) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "element face " << mesh.triangles.size() << "\n";
  out << "property list uchar int vertex_indices\nend_header\n";
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    for (int k = 0; k < 3; ++k) put(out, static_cast<float>(mesh.vertices[i][k]));
    if (has_color) {
      for (int k = 0; k < 3; ++k) {
        put(out, static_cast<std::uint8_t>(std::lround(std::clamp(mesh.colors[i][k], 0.0, 1.0) * 255.0)));
      }
    }
  }
  for (const auto& t : mesh.triangles) {
    put(out, static_cast<std::uint8_t>(3));
    for (auto idx : t) put(out, static_cast<std::int32_t>(idx));
  }
  if (!out) throw InputError("failed writing PLY: " + path.string());
}

TriangleMesh load_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open PLY: " + path.string());
  std::string line;
  std::size_t n_vertices = 0, n_faces = 0;
  bool has_color = false;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "element") {
      std::string what;
      std::size_t count;
      ss >> what >> count;
      (what == "vertex" ? n_vertices : n_faces) = count;
    } else if (word == "property" && line.find("red") != std::string::npos) {
      has_color = true;
    } else if (word == "end_header") {
      break;
    }
  }
  TriangleMesh mesh;
  for (std::size_t i = 0; i < n_vertices; ++i) {
    Vec3 v;
    for (int k = 0; k < 3; ++k) v[k] = get<float>(in);
    mesh.vertices.push_back(v);
    if (has_color) {
      Vec3 c;
      for (int k = 0; k < 3; ++k) c[k] = get<std::uint8_t>(in) / 255.0;
      mesh.colors.push_back(c);
    }
  }
  for (std::size_t i = 0; i < n_faces; ++i) {
    const auto count = get<std::uint8_t>(in);
    if (count != 3) throw InputError("load_ply: only triangle faces are supported");
    std::array<std::uint32_t, 3> t{};
    for (auto& idx : t) idx = static_cast<std::uint32_t>(get<std::int32_t>(in));
    mesh.triangles.push_back(t);
  }
  if (!in) throw InputError("truncated PLY: " + path.string());
  return mesh;
}

}  // namespace priorslam
