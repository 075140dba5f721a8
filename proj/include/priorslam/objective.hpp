#pragma once

#include <span>
#include <vector>

#include "priorslam/renderer.hpp"
#include "priorslam/types.hpp"

namespace priorslam {

struct ObjectiveWeights {
  double rgb = 10.0;
  double depth = 0.1;
  double fs = 20.0;
  double sdf = 1000.0;
};

struct LossTerms {
  double rgb = 0.0;
  double depth = 0.0;
  double fs = 0.0;
  double sdf = 0.0;
  double total = 0.0;

  /// Recomputes total from the four terms.
  void finalize(const ObjectiveWeights& w) { total = w.rgb * rgb + w.depth * depth + w.fs * fs + w.sdf * sdf; }
};

enum class SampleClass { kFreeSpace, kTruncation, kBehind };

/// |D - z| <= tr: truncation band; z < D - tr: free space; otherwise behind the surface.
SampleClass classify_sample(double z, double observed_depth, double tr);

struct SamplePartition {
  std::vector<std::size_t> free_space;
  std::vector<std::size_t> truncation;
  std::vector<std::size_t> behind;
};
SamplePartition classify_samples(std::span<const double> z, double observed_depth, double tr);

/// Unweighted loss terms of one rendered ray plus their gradients.
struct RayLoss {
  LossTerms terms;  // total left at 0; callers weight and average
  Vec3 d_color = Vec3::Zero();
  double d_depth = 0.0;
};

/// Per-ray terms. The SDF and free-space terms average over the samples inside
/// the volume that fall in each band (0 when the band is empty). When d_sdf is
/// non-empty it receives the weighted gradient of w.fs*l_fs + w.sdf*l_sdf per
/// sample, and d_color/d_depth hold the weighted gradients of the render terms.
RayLoss ray_loss(const RaySampleBatch& samples, const Rendered& rendered, const Vec3& observed_color,
                 double observed_depth, double tr, const ObjectiveWeights& w, std::span<double> d_sdf);

/// Rendered ray together with its observation, for batch-level evaluation.
struct RenderedRay {
  RaySampleBatch samples;
  Rendered rendered;
  Vec3 observed_color = Vec3::Zero();
  double observed_depth = 0.0;
};

/// Mean of the per-ray terms over non-excluded rays, with the weighted total.
/// Throws InputError if every ray is excluded.
LossTerms compute_losses(std::span<const RenderedRay> rays, double tr, const ObjectiveWeights& w);

}  // namespace priorslam
