#include "priorslam/objective.hpp"

#include <cmath>

namespace priorslam {

SampleClass classify_sample(double z, double D, double tr) {
  if (std::abs(D - z) <= tr) return SampleClass::kTruncation;
  return z < D - tr ? SampleClass::kFreeSpace : SampleClass::kBehind;
}

SamplePartition classify_samples(std::span<const double> z, double D, double tr) {
  SamplePartition p;
  for (std::size_t i = 0; i < z.size(); ++i) {
    switch (classify_sample(z[i], D, tr)) {
      case SampleClass::kFreeSpace: p.free_space.push_back(i); break;
      case SampleClass::kTruncation: p.truncation.push_back(i); break;
      case SampleClass::kBehind: p.behind.push_back(i); break;
    }
  }
  return p;
}

RayLoss ray_loss(const RaySampleBatch& samples, const Rendered& rendered, const Vec3& C, double D, double tr,
                 const ObjectiveWeights& w, std::span<double> d_sdf) {
  RayLoss out;
  const Vec3 color_err = rendered.color - C;
  const double depth_err = rendered.depth - D;
  out.terms.rgb = color_err.squaredNorm();
  out.terms.depth = depth_err * depth_err;
  out.d_color = 2.0 * w.rgb * color_err;
  out.d_depth = 2.0 * w.depth * depth_err;

  std::size_t n_fs = 0, n_tr = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!samples.inside[i]) continue;
    const SampleClass c = classify_sample(samples.z[i], D, tr);
    n_fs += c == SampleClass::kFreeSpace;
    n_tr += c == SampleClass::kTruncation;
  }
  const bool want_grad = !d_sdf.empty();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (want_grad) d_sdf[i] = 0.0;
    if (!samples.inside[i]) continue;
    const double s = samples.sdf[i];
    switch (classify_sample(samples.z[i], D, tr)) {
      case SampleClass::kTruncation: {
        const double r = s - (D - samples.z[i]);
        out.terms.sdf += r * r / static_cast<double>(n_tr);
        if (want_grad) d_sdf[i] = 2.0 * w.sdf * r / static_cast<double>(n_tr);
        break;
      }
      case SampleClass::kFreeSpace: {
        const double r = s - tr;
        out.terms.fs += r * r / static_cast<double>(n_fs);
        if (want_grad) d_sdf[i] = 2.0 * w.fs * r / static_cast<double>(n_fs);
        break;
      }
      case SampleClass::kBehind: break;
    }
  }
  return out;
}

LossTerms compute_losses(std::span<const RenderedRay> rays, double tr, const ObjectiveWeights& w) {
  LossTerms sum;
  std::size_t used = 0;
  for (const auto& r : rays) {
    if (r.rendered.excluded) continue;
    const RayLoss l = ray_loss(r.samples, r.rendered, r.observed_color, r.observed_depth, tr, w, {});
    sum.rgb += l.terms.rgb;
    sum.depth += l.terms.depth;
    sum.fs += l.terms.fs;
    sum.sdf += l.terms.sdf;
    ++used;
  }
  if (used == 0) throw InputError("compute_losses: every ray was excluded");
  const double inv = 1.0 / static_cast<double>(used);
  sum.rgb *= inv;
  sum.depth *= inv;
  sum.fs *= inv;
  sum.sdf *= inv;
  sum.finalize(w);
  return sum;
}

}  // namespace priorslam
