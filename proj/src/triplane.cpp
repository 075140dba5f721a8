#include "priorslam/triplane.hpp"

#include <cmath>

namespace priorslam {
namespace {

// Axis pairs (a, b) of the xy, xz and yz planes.
constexpr int kPlaneAxes[3][2] = {{0, 1}, {0, 2}, {1, 2}};

}  // namespace

TriPlanes::TriPlanes(const Aabb& bounds, double cell_size) : bounds_(bounds), cell_size_(cell_size) {
  if (!(cell_size > 0.0)) throw InputError("tri-plane cell size must be positive");
  if (!((bounds.max.array() > bounds.min.array()).all())) throw InputError("tri-plane bounds must have positive extent");
  for (int a = 0; a < 3; ++a) {
    nodes_[a] = static_cast<int>(std::ceil(bounds.extent()[a] / cell_size - 1e-9)) + 1;
    bounds_.max[a] = bounds_.min[a] + (nodes_[a] - 1) * cell_size;
  }
  std::uint32_t offset = 0;
  for (int pl = 0; pl < 3; ++pl) {
    plane_offset_[pl] = offset;
    offset += static_cast<std::uint32_t>(nodes_[kPlaneAxes[pl][0]] * nodes_[kPlaneAxes[pl][1]]);
  }
  features_.name = "planes";
  features_.values.assign(static_cast<std::size_t>(offset) * kPlaneChannels, 0.0);
}

void TriPlanes::randomize(Rng& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : features_.values) v = dist(rng);
}

std::uint32_t TriPlanes::node_row(int plane, int i, int j) const {
  return plane_offset_[plane] + static_cast<std::uint32_t>(i * nodes_[kPlaneAxes[plane][1]] + j);
}

void TriPlanes::stencil(const Vec3& p, PlaneStencil& out) const {
  std::array<int, 3> cell{};
  bool any_clamp = false;
  for (int a = 0; a < 3; ++a) {
    double x = (p[a] - bounds_.min[a]) / cell_size_;
    const double hi = nodes_[a] - 1;
    out.clamped[a] = !(x >= 0.0 && x <= hi);
    if (out.clamped[a]) {
      any_clamp = true;
      x = x < 0.0 || !std::isfinite(x) ? 0.0 : hi;
    }
    int c = static_cast<int>(std::floor(x));
    c = std::min(std::max(c, 0), nodes_[a] - 2);
    cell[a] = c;
    out.frac[a] = x - c;
  }
  if (any_clamp) clamps_.fetch_add(1, std::memory_order_relaxed);
  for (int pl = 0; pl < 3; ++pl) {
    const int a = kPlaneAxes[pl][0], b = kPlaneAxes[pl][1];
    const double fa = out.frac[a], fb = out.frac[b];
    for (int k = 0; k < 4; ++k) {
      const int da = k & 1, db = (k >> 1) & 1;
      out.node[pl * 4 + k] = node_row(pl, cell[a] + da, cell[b] + db);
      out.weight[pl * 4 + k] = (da ? fa : 1.0 - fa) * (db ? fb : 1.0 - fb);
    }
  }
}

PlaneFeature TriPlanes::interpolate(const PlaneStencil& s) const {
  PlaneFeature f = PlaneFeature::Zero();
  for (int k = 0; k < 12; ++k) {
    f += s.weight[k] *
         Eigen::Map<const PlaneFeature>(features_.values.data() + static_cast<std::size_t>(s.node[k]) * kPlaneChannels);
  }
  return f;
}

PlaneFeature TriPlanes::project_features(const Vec3& p) const {
  PlaneStencil s;
  stencil(p, s);
  return interpolate(s);
}

Vec3 TriPlanes::backward(const PlaneStencil& s, const PlaneFeature& d_feature, SparseGrad* grad) const {
  if (grad != nullptr) {
    for (int k = 0; k < 12; ++k) {
      double* row = grad->row(s.node[k]);
      for (int c = 0; c < kPlaneChannels; ++c) row[c] += s.weight[k] * d_feature[c];
    }
  }
  Vec3 dfrac = Vec3::Zero();
  for (int pl = 0; pl < 3; ++pl) {
    const int a = kPlaneAxes[pl][0], b = kPlaneAxes[pl][1];
    const double fa = s.frac[a], fb = s.frac[b];
    for (int k = 0; k < 4; ++k) {
      const int da = k & 1, db = (k >> 1) & 1;
      const double proj = d_feature.dot(Eigen::Map<const PlaneFeature>(
          features_.values.data() + static_cast<std::size_t>(s.node[pl * 4 + k]) * kPlaneChannels));
      dfrac[a] += proj * (da ? 1.0 : -1.0) * (db ? fb : 1.0 - fb);
      dfrac[b] += proj * (da ? fa : 1.0 - fa) * (db ? 1.0 : -1.0);
    }
  }
  for (int a = 0; a < 3; ++a) {
    if (s.clamped[a]) dfrac[a] = 0.0;
  }
  return dfrac / cell_size_;
}

}  // namespace priorslam
