#pragma once

#include <optional>
#include <vector>

#include "priorslam/scene.hpp"

namespace priorslam {

struct TrackingConfig {
  int iterations = 4;
  std::size_t pixels = 1024;
  double lr_rotation = 0.001;
  double lr_translation = 0.002;
};

struct TrackResult {
  PoseParams pose;
  /// Minimum recorded objective; empty when no iteration ran.
  std::optional<double> loss;
  int best_iteration = -1;
  /// Objective recorded at each iteration, before that iteration's step.
  std::vector<double> losses;
};

/// Optimizes only the camera pose of `frame` against a frozen scene, starting
/// from `init`. Every iteration draws a fresh pixel batch, records the
/// objective at the current pose and takes one Adam step on the quaternion and
/// translation (separate learning rates), then re-normalizes the quaternion.
/// The pose with the smallest recorded objective is returned.
TrackResult optimize_pose(const Frame& frame, const Intrinsics& K, const PoseParams& init, const Scene& scene,
                          const SamplingConfig& sampling, const ObjectiveWeights& weights, const TrackingConfig& cfg,
                          Rng& rng);

/// optimize_pose started from the constant-velocity prediction of `history`
/// (the poses of all previous frames). Throws InputError if the frame has no
/// valid depth.
TrackResult track_frame(const Frame& frame, const Intrinsics& K, const std::vector<PoseParams>& history,
                        const Scene& scene, const SamplingConfig& sampling, const ObjectiveWeights& weights,
                        const TrackingConfig& cfg, Rng& rng);

}  // namespace priorslam
