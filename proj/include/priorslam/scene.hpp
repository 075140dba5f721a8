#pragma once

#include <span>
#include <vector>

#include "priorslam/decoders.hpp"
#include "priorslam/diffcore.hpp"
#include "priorslam/frame_io.hpp"
#include "priorslam/objective.hpp"
#include "priorslam/pose.hpp"
#include "priorslam/renderer.hpp"
#include "priorslam/sparse_volume.hpp"
#include "priorslam/triplane.hpp"

namespace priorslam {

/// The hybrid scene: sparse geometry embeddings, appearance tri-planes and the
/// two decoders that read them.
class Scene {
 public:
  Scene(const Aabb& bounds, double voxel_size = 0.04, double plane_cell = 0.04);

  /// Maps p from the scene box to [-1, 1]^3.
  [[nodiscard]] Vec3 normalize_point(const Vec3& p) const;
  /// d normalize_point / dp (diagonal).
  [[nodiscard]] Vec3 normalize_scale() const { return normalize_scale_; }
  [[nodiscard]] const Aabb& bounds() const { return planes.bounds(); }

  /// Decoded SDF at p; nullopt outside the allocated volume.
  [[nodiscard]] std::optional<double> sdf(const Vec3& p) const;
  [[nodiscard]] Vec3 color(const Vec3& p) const;

  /// Groups in optimizer order: embeddings, planes, geometry decoder, color decoder.
  std::vector<ParamGroup*> param_groups();

  SparseVolume volume;
  TriPlanes planes;
  GeometryDecoder geometry;
  ColorDecoder color_decoder;

 private:
  Vec3 normalize_scale_;
};

/// Gradients for the four scene groups, same order as Scene::param_groups.
struct SceneGrad {
  GradientBuffer buffers;

  /// Sizes (or grows) the buffers to match the scene and clears them.
  void prepare(const Scene& scene);
  void clear();
  void scale(double s);
  SparseGrad& embeddings() { return buffers[0]; }
  SparseGrad& planes() { return buffers[1]; }
  SparseGrad& geometry() { return buffers[2]; }
  SparseGrad& color() { return buffers[3]; }
};

struct PoseGrad {
  Vec4 dq = Vec4::Zero();
  Vec3 dt = Vec3::Zero();
};

/// A pixel to render and the pose slot (index into the pose span) of its frame.
struct RayQuery {
  PixelSample pixel;
  std::size_t pose_slot = 0;
};

struct BatchResult {
  LossTerms terms;
  std::size_t rays = 0;
  std::size_t excluded = 0;
};

/// Renders every query, evaluates the weighted objective averaged over the
/// non-excluded rays and, when the outputs are given, back-propagates it into
/// scene parameters and per-slot poses. Gradients are those of terms.total.
/// Throws NumericError if the loss or a gradient is non-finite and InputError
/// if every ray is excluded.
BatchResult evaluate_batch(const Scene& scene, std::span<const RayQuery> queries, std::span<const PoseParams> poses,
                           const Intrinsics& K, const SamplingConfig& sampling, const ObjectiveWeights& weights,
                           Rng& rng, SceneGrad* scene_grad = nullptr, std::vector<PoseGrad>* pose_grad = nullptr);

}  // namespace priorslam
