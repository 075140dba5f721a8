#include "priorslam/evaluator.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "priorslam/sparse_volume.hpp"

namespace priorslam {

PoseParams align_rigid(const std::vector<Vec3>& src, const std::vector<Vec3>& dst) {
  if (src.size() != dst.size() || src.empty()) throw InputError("align_rigid: point sets must be non-empty and equal size");
  Eigen::Matrix3Xd a(3, src.size()), b(3, dst.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    a.col(static_cast<Eigen::Index>(i)) = src[i];
    b.col(static_cast<Eigen::Index>(i)) = dst[i];
  }
  const Mat4 T = Eigen::umeyama(a, b, false);
  return to_pose(T.topLeftCorner<3, 3>(), T.topRightCorner<3, 1>());
}

double ate_rmse(const Trajectory& est, const Trajectory& gt) {
  std::vector<Vec3> src, dst;
  for (const auto& [id, pose] : est) {
    auto it = gt.find(id);
    if (it == gt.end()) continue;
    src.push_back(pose.t);
    dst.push_back(it->second.t);
  }
  if (src.size() < 3) throw InputError("ate_rmse: need at least 3 common frames, got " + std::to_string(src.size()));
  const PoseParams align = align_rigid(src, dst);
  const Mat3 R = align.rotation();
  double sum = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) sum += (R * src[i] + align.t - dst[i]).squaredNorm();
  return 100.0 * std::sqrt(sum / static_cast<double>(src.size()));
}

std::vector<Vec3> sample_surface(const TriangleMesh& mesh, std::size_t n, Rng& rng) {
  if (mesh.empty()) throw InputError("sample_surface: empty mesh");
  std::vector<double> areas;
  areas.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices.at(t[0]);
    areas.push_back(0.5 * (mesh.vertices.at(t[1]) - a).cross(mesh.vertices.at(t[2]) - a).norm());
  }
  std::discrete_distribution<std::size_t> pick(areas.begin(), areas.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = mesh.triangles[pick(rng)];
    const double r1 = std::sqrt(unit(rng));
    const double r2 = unit(rng);
    out.push_back((1.0 - r1) * mesh.vertices[t[0]] + r1 * (1.0 - r2) * mesh.vertices[t[1]] +
                  r1 * r2 * mesh.vertices[t[2]]);
  }
  return out;
}

double percent_within(const std::vector<Vec3>& queries, const std::vector<Vec3>& reference, double threshold) {
  if (queries.empty()) throw InputError("percent_within: no query points");
  if (!(threshold > 0.0)) throw InputError("percent_within: threshold must be positive");
  auto cell_of = [&](const Vec3& p) {
    return VoxelKey{static_cast<int>(std::floor(p.x() / threshold)), static_cast<int>(std::floor(p.y() / threshold)),
                    static_cast<int>(std::floor(p.z() / threshold))};
  };
  std::unordered_map<VoxelKey, std::vector<std::uint32_t>, VoxelKeyHash> grid;
  for (std::size_t i = 0; i < reference.size(); ++i) grid[cell_of(reference[i])].push_back(static_cast<std::uint32_t>(i));
  const double t2 = threshold * threshold;
  std::size_t hits = 0;
  for (const Vec3& q : queries) {
    const VoxelKey c = cell_of(q);
    bool found = false;
    for (int dx = -1; dx <= 1 && !found; ++dx) {
      for (int dy = -1; dy <= 1 && !found; ++dy) {
        for (int dz = -1; dz <= 1 && !found; ++dz) {
          auto it = grid.find({c.x + dx, c.y + dy, c.z + dz});
          if (it == grid.end()) continue;
          for (auto idx : it->second) {
            if ((reference[idx] - q).squaredNorm() <= t2) {
              found = true;
              break;
            }
          }
        }
      }
    }
    hits += found ? 1 : 0;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(queries.size());
}

ReconMetrics mesh_metrics(const TriangleMesh& rec, const TriangleMesh& gt, std::size_t n, double threshold, Rng& rng) {
  if (rec.empty() || gt.empty()) throw InputError("mesh_metrics: both meshes must be non-empty");
  const auto seed = rng();
  Rng rec_rng(seed), gt_rng(seed);
  const auto rec_pts = sample_surface(rec, n, rec_rng);
  const auto gt_pts = sample_surface(gt, n, gt_rng);
  ReconMetrics m;
  m.accuracy_pct = percent_within(rec_pts, gt_pts, threshold);
  m.completeness_pct = percent_within(gt_pts, rec_pts, threshold);
  const double s = m.accuracy_pct + m.completeness_pct;
  m.f1_pct = s > 0.0 ? 2.0 * m.accuracy_pct * m.completeness_pct / s : 0.0;
  return m;
}

std::string format_report(const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ostringstream out;
  for (const auto& [k, v] : entries) out << k << " = " << v << "\n";
  return out.str();
}

void write_report(const std::filesystem::path& path, const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write report: " + path.string());
  out << format_report(entries);
}

}  // namespace priorslam
