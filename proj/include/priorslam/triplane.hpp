#pragma once

#include <array>
#include <atomic>
#include <cstdint>

#include "priorslam/diffcore.hpp"
#include "priorslam/types.hpp"

namespace priorslam {

inline constexpr int kPlaneChannels = 8;
using PlaneFeature = Eigen::Matrix<double, kPlaneChannels, 1>;

/// Bilinear stencils of one point on the xy, xz and yz planes.
struct PlaneStencil {
  std::array<std::uint32_t, 12> node{};  // rows into the feature group, 4 per plane
  std::array<double, 12> weight{};
  Vec3 frac = Vec3::Zero();               // fractional cell position per axis
  std::array<bool, 3> clamped{};          // axis was clamped to the bounds
};

/// Three axis-aligned feature grids over a fixed scene box. The feature at p
/// is the sum of the bilinear interpolants on each plane.
class TriPlanes {
 public:
  /// Node counts are ceil(extent / cell_size) + 1 per axis, so the grid covers
  /// the box (the upper bound is rounded out to a whole cell).
  TriPlanes(const Aabb& bounds, double cell_size = 0.04);

  /// Fills every feature with N(0, stddev^2).
  void randomize(Rng& rng, double stddev);

  [[nodiscard]] const Aabb& bounds() const { return bounds_; }
  [[nodiscard]] double cell_size() const { return cell_size_; }
  [[nodiscard]] const std::array<int, 3>& node_counts() const { return nodes_; }

  [[nodiscard]] ParamGroup& features() { return features_; }
  [[nodiscard]] const ParamGroup& features() const { return features_; }

  /// Row index (in units of kPlaneChannels) of node (i, j) on plane 0=xy, 1=xz, 2=yz.
  [[nodiscard]] std::uint32_t node_row(int plane, int i, int j) const;

  /// Out-of-box points are clamped to the box; each such query bumps clamp_count().
  void stencil(const Vec3& p, PlaneStencil& out) const;
  [[nodiscard]] PlaneFeature interpolate(const PlaneStencil& s) const;
  [[nodiscard]] PlaneFeature project_features(const Vec3& p) const;

  /// Accumulates d/d(features) into grad; returns d/dp (zero on clamped axes).
  Vec3 backward(const PlaneStencil& s, const PlaneFeature& d_feature, SparseGrad* grad) const;

  [[nodiscard]] std::uint64_t clamp_count() const { return clamps_.load(); }

 private:
  Aabb bounds_;
  double cell_size_;
  std::array<int, 3> nodes_{};
  std::array<std::uint32_t, 3> plane_offset_{};
  ParamGroup features_;
  mutable std::atomic<std::uint64_t> clamps_{0};

 public:
  TriPlanes(const TriPlanes& o)
      : bounds_(o.bounds_), cell_size_(o.cell_size_), nodes_(o.nodes_), plane_offset_(o.plane_offset_),
        features_(o.features_), clamps_(o.clamps_.load()) {}
  TriPlanes& operator=(const TriPlanes& o) {
    bounds_ = o.bounds_;
    cell_size_ = o.cell_size_;
    nodes_ = o.nodes_;
    plane_offset_ = o.plane_offset_;
    features_ = o.features_;
    clamps_ = o.clamps_.load();
    return *this;
  }
};

}  // namespace priorslam
