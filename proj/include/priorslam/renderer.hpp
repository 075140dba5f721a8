#pragma once

#include <span>
#include <vector>

#include "priorslam/frame_io.hpp"
#include "priorslam/pose.hpp"
#include "priorslam/types.hpp"

namespace priorslam {

struct SamplingConfig {
  int n_coarse = 32;
  int n_fine = 11;
  double near_factor = 0.2;
  double far_factor = 1.02;
  /// Truncation distance (meters) for both near-surface sampling and the losses.
  double tr = 0.08;

  [[nodiscard]] int total() const { return n_coarse + n_fine; }
  /// Throws InputError unless 0 < near < 1 < far, counts >= 1 and tr > 0.
  void validate() const;
};

/// A camera ray through pixel (u, v). `depth` is the observed range along the
/// unit direction, i.e. the z-depth scaled by the pixel ray length.
struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
  /// Unit direction in the camera frame; direction = R * camera_direction.
  Vec3 camera_direction = Vec3::UnitZ();
  int frame_id = 0;
  int u = 0;
  int v = 0;
  double depth = 0.0;
  Vec3 color = Vec3::Zero();
};

Ray generate_ray(double u, double v, const Intrinsics& K, const PoseParams& T);

/// Ray for a stored pixel, with its observation converted to a range.
Ray make_ray(const PixelSample& px, const Intrinsics& K, const PoseParams& T);

/// n_coarse stratified depths in [near*D, far*D] (one uniform draw per equal
/// bin) plus n_fine uniform depths in [D - tr, D + tr], sorted ascending.
std::vector<double> sample_ray(double observed_range, const SamplingConfig& cfg, Rng& rng);

/// sigma(s/tr) * sigma(-s/tr).
double bell_weight(double s, double tr);
/// d bell_weight / d s.
double bell_weight_derivative(double s, double tr);

/// Per-sample quantities along one ray.
struct RaySampleBatch {
  std::vector<double> z;
  std::vector<double> sdf;
  std::vector<Vec3> color;
  /// 0 when the sample lies outside the allocated volume.
  std::vector<std::uint8_t> inside;

  void resize(std::size_t n) {
    z.resize(n);
    sdf.resize(n);
    color.resize(n);
    inside.resize(n);
  }
  [[nodiscard]] std::size_t size() const { return z.size(); }
};

struct Rendered {
  Vec3 color = Vec3::Zero();
  double depth = 0.0;
  double weight_sum = 0.0;
  bool excluded = false;
};

/// Rays whose bell weights sum below this are dropped from the losses.
inline constexpr double kMinWeightSum = 1e-12;

/// Normalized weighted sums of color and depth. Weights use the TSDF
/// expressed in truncation units: w_i = bell_weight(s_i / tr, tr).
Rendered render(const RaySampleBatch& samples, double tr);

/// Gradients of dot(d_color, C) + d_depth * D with respect to sdf, color and z.
/// Output spans must have samples.size() entries; d_z may be empty.
void render_backward(const RaySampleBatch& samples, const Rendered& out, double tr, const Vec3& d_color,
                     double d_depth, std::span<double> d_sdf, std::span<Vec3> d_sample_color, std::span<double> d_z);

}  // namespace priorslam
