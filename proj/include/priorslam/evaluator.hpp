#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "priorslam/mesher.hpp"
#include "priorslam/pose.hpp"

namespace priorslam {

/// Poses keyed by frame id (ascending, unique by construction).
using Trajectory = std::map<int, PoseParams>;

/// Rigid transform (no scale) minimizing sum |R*src_i + t - dst_i|^2.
PoseParams align_rigid(const std::vector<Vec3>& src, const std::vector<Vec3>& dst);

/// Absolute trajectory error in centimeters after rigid alignment of the
/// estimated positions onto ground truth over the common frame ids.
/// Throws InputError with fewer than 3 common frames.
double ate_rmse(const Trajectory& est, const Trajectory& gt);

struct ReconMetrics {
  double accuracy_pct = 0.0;
  double completeness_pct = 0.0;
  double f1_pct = 0.0;
};

/// `n` points drawn uniformly over the mesh surface (triangle chosen by area).
std::vector<Vec3> sample_surface(const TriangleMesh& mesh, std::size_t n, Rng& rng);

/// Percentage of `queries` with a point of `reference` within `threshold`.
/// Exact: a uniform hash grid with cell size `threshold` bounds the search.
double percent_within(const std::vector<Vec3>& queries, const std::vector<Vec3>& reference, double threshold);

/// Accuracy (rec samples near gt samples), completeness (the converse) and
/// their harmonic mean. Both meshes are sampled from the same seed drawn from
/// `rng`, so swapping the arguments swaps accuracy and completeness exactly.
ReconMetrics mesh_metrics(const TriangleMesh& rec, const TriangleMesh& gt, std::size_t n, double threshold, Rng& rng);

/// Flat `key = value` report, one entry per line, in the given order.
void write_report(const std::filesystem::path& path, const std::vector<std::pair<std::string, std::string>>& entries);
std::string format_report(const std::vector<std::pair<std::string, std::string>>& entries);

}  // namespace priorslam
