#include "priorslam/renderer.hpp"

#include <algorithm>
#include <cmath>

#include "priorslam/diffcore.hpp"

namespace priorslam {

void SamplingConfig::validate() const {
  if (n_coarse < 1 || n_fine < 1) throw InputError("sampling counts must be >= 1");
  if (!(near_factor > 0.0 && near_factor < 1.0 && far_factor > 1.0)) {
    throw InputError("sampling requires 0 < near_factor < 1 < far_factor");
  }
  if (!(tr > 0.0)) throw InputError("truncation distance must be positive");
}

Ray generate_ray(double u, double v, const Intrinsics& K, const PoseParams& T) {
  Ray r;
  r.camera_direction = K.pixel_ray(u, v).normalized();
  r.origin = T.t;
  r.direction = T.rotation() * r.camera_direction;
  r.u = static_cast<int>(u);
  r.v = static_cast<int>(v);
  return r;
}

Ray make_ray(const PixelSample& px, const Intrinsics& K, const PoseParams& T) {
  Ray r = generate_ray(px.u, px.v, K, T);
  r.frame_id = px.frame_id;
  r.depth = px.depth * K.pixel_ray(px.u, px.v).norm();
  r.color = px.color;
  return r;
}

std::vector<double> sample_ray(double D, const SamplingConfig& cfg, Rng& rng) {
  std::vector<double> z;
  z.reserve(cfg.total());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double near = cfg.near_factor * D, far = cfg.far_factor * D;
  const double bin = (far - near) / cfg.n_coarse;
  for (int i = 0; i < cfg.n_coarse; ++i) z.push_back(near + (i + unit(rng)) * bin);
  for (int i = 0; i < cfg.n_fine; ++i) z.push_back(D - cfg.tr + 2.0 * cfg.tr * unit(rng));
  std::sort(z.begin(), z.end());
  // Keep every depth strictly in front of the camera.
  for (double& zi : z) zi = std::max(zi, 1e-6);
  return z;
}

// sigma(x) sigma(-x) = e / (1 + e)^2 with e = exp(-|x|): symmetric bit for bit
// and free of the cancellation in 1 - sigma(x) for large |x|.
double bell_weight(double s, double tr) {
  const double e = std::exp(-std::abs(s) / tr);
  return e / ((1.0 + e) * (1.0 + e));
}

double bell_weight_derivative(double s, double tr) {
  const double e = std::exp(-std::abs(s) / tr);
  const double w = e / ((1.0 + e) * (1.0 + e));
  const double slope = w * (e - 1.0) / (1.0 + e) / tr;
  return s >= 0.0 ? slope : -slope;
}

Rendered render(const RaySampleBatch& samples, double tr) {
  Rendered out;
  double wsum = 0.0;
  Vec3 csum = Vec3::Zero();
  double dsum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double w = bell_weight(samples.sdf[i] / tr, tr);
    wsum += w;
    csum += w * samples.color[i];
    dsum += w * samples.z[i];
  }
  out.weight_sum = wsum;
  if (!(wsum >= kMinWeightSum)) {
    out.excluded = true;
    return out;
  }
  out.color = csum / wsum;
  out.depth = dsum / wsum;
  return out;
}

void render_backward(const RaySampleBatch& samples, const Rendered& out, double tr, const Vec3& d_color,
                     double d_depth, std::span<double> d_sdf, std::span<Vec3> d_sample_color, std::span<double> d_z) {
  const std::size_t n = samples.size();
  if (out.excluded) {
    std::fill(d_sdf.begin(), d_sdf.end(), 0.0);
    std::fill(d_sample_color.begin(), d_sample_color.end(), Vec3::Zero());
    std::fill(d_z.begin(), d_z.end(), 0.0);
    return;
  }
  const double W = out.weight_sum;
  // dL/dw_i = (g_i - sum_j w_hat_j g_j) / W with g_i = d_color.c_i + d_depth z_i.
  const double mean_g = d_color.dot(out.color) + d_depth * out.depth;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = bell_weight(samples.sdf[i] / tr, tr);
    const double g = d_color.dot(samples.color[i]) + d_depth * samples.z[i];
    const double dw = (g - mean_g) / W;
    d_sdf[i] = dw * bell_weight_derivative(samples.sdf[i] / tr, tr) / tr;
    d_sample_color[i] = (w / W) * d_color;
    if (!d_z.empty()) d_z[i] = (w / W) * d_depth;
  }
}

}  // namespace priorslam
