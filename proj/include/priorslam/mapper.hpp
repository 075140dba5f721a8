#pragma once

#include <map>
#include <span>
#include <vector>

#include "priorslam/scene.hpp"

namespace priorslam {

/// Append-only store of sampled pixels, grouped by frame.
class PixelDatabase {
 public:
  explicit PixelDatabase(std::size_t per_frame_capacity = 15000) : capacity_(per_frame_capacity) {}

  /// Stores min(capacity, valid) pixels of the frame; returns how many.
  /// Throws InputError if the frame id was already added.
  std::size_t add_frame(const Frame& frame, Rng& rng);

  [[nodiscard]] bool has_frame(int frame_id) const { return pixels_.count(frame_id) > 0; }
  [[nodiscard]] std::span<const PixelSample> pixels(int frame_id) const;
  [[nodiscard]] std::size_t size() const { return total_; }
  [[nodiscard]] std::size_t frame_count() const { return pixels_.size(); }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::size_t total_ = 0;
  std::map<int, std::vector<PixelSample>> pixels_;
};

/// Per-frame data used for covisibility: camera-frame points of a sparse
/// valid-depth sample and the frame's current pose estimate.
struct FrameMeta {
  int frame_id = 0;
  PoseParams pose;
  std::vector<Vec3> camera_points;
};

FrameMeta make_frame_meta(const Frame& frame, const Intrinsics& K, const PoseParams& pose, Rng& rng,
                          std::size_t count = 200);

/// Fraction of a's points (placed in the world with a's pose) that land inside
/// b's image with positive depth under b's pose.
double covisibility(const FrameMeta& a, const FrameMeta& b, const Intrinsics& K);

struct SelectionConfig {
  int recent = 20;
  int covisible = 90;
  int random = 90;
  double min_covisibility = 0.10;
  [[nodiscard]] int budget() const { return recent + covisible + random; }
};

/// Most recent frames first, then a uniform draw from frames whose covisibility
/// with `current` exceeds the threshold, then a uniform draw from the remaining
/// history. Returns every frame when the history fits in the budget.
std::vector<int> select_frames(int current, std::span<const FrameMeta> metas, const Intrinsics& K,
                               const SelectionConfig& cfg, Rng& rng);

/// Keyframe baseline: keyframes are every `stride`-th frame; picks the
/// `recent` newest keyframes plus up to `covisible` random covisible ones.
std::vector<int> select_keyframes(int current, std::span<const FrameMeta> metas, const Intrinsics& K, int stride,
                                  int recent, int covisible, double min_covisibility, Rng& rng);

enum class MappingStrategy { kAllFrames, kKeyframe };

struct MappingConfig {
  /// Map every `interval` frames; 0 disables mapping.
  int interval = 5;
  int iterations = 20;
  std::size_t pixels = 2048;
  std::size_t pixels_per_frame = 15000;
  SelectionConfig selection;
  MappingStrategy strategy = MappingStrategy::kAllFrames;
  int keyframe_stride = 4;
  int keyframe_recent = 2;
  int keyframe_covisible = 18;
  double lr_embeddings = 0.004;
  double lr_planes = 0.004;
  double lr_decoders = 0.001;
  double lr_poses = 0.001;
};

struct MapStepResult {
  std::vector<LossTerms> iterations;
  std::size_t frames_used = 0;
  std::size_t frames_dropped = 0;
  /// Frames kept in the batch and the pixels drawn from each per iteration.
  std::vector<int> frame_ids;
  std::vector<std::size_t> pixels_per_frame;
};

/// Joint optimization of the scene and the poses of `selected` frames (pose
/// of frame 0 stays fixed). `poses` is indexed by frame id and updated in
/// place. `scene_adam` and `pose_adam` carry the optimizer moments across
/// calls; pose moments are kept per frame id.
MapStepResult map_step(std::span<const int> selected, const PixelDatabase& db, Scene& scene,
                       std::vector<PoseParams>& poses, const Intrinsics& K, const MappingConfig& cfg,
                       const SamplingConfig& sampling, const ObjectiveWeights& weights, AdamState& scene_adam,
                       AdamState& pose_adam, Rng& rng);

}  // namespace priorslam
