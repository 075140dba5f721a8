#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "priorslam/config.hpp"
#include "priorslam/evaluator.hpp"
#include "priorslam/mesher.hpp"

namespace priorslam {

struct RunResult {
  /// Final optimized camera-to-world pose of every processed frame.
  std::vector<PoseParams> poses;
  std::optional<double> ate_cm;
  std::optional<ReconMetrics> recon;
  TriangleMesh mesh;
  /// Everything written to metrics.txt, in order.
  std::vector<std::pair<std::string, std::string>> metrics;
  double seconds = 0.0;
};

/// Tracks and maps the configured sequence, then writes trajectory.txt,
/// mesh.ply, metrics.txt, run.log and scene.ckpt into cfg.output.
/// Frame 0 is the identity pose; frame k > 0 is tracked against the current
/// scene, fused and added to the pixel database; mapping runs on every frame
/// index divisible by the mapping interval. Ground truth, when present, is
/// evaluated: ATE over the trajectory and, if a reference geometry is
/// configured, accuracy/completeness/F1 of the mesh expressed in the frame-0
/// camera coordinates. A non-finite loss saves the last good scene to
/// scene.ckpt and rethrows.
RunResult run(const SystemConfig& cfg);

/// Reference mesh for a built-in analytic scene: marching cubes of the exact
/// SDF over the voxels allocated when every frame is fused at its true pose.
TriangleMesh reference_mesh(const std::string& scene_name, const Dataset& dataset, const SystemConfig& cfg);

}  // namespace priorslam
