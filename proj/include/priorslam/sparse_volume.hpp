#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "priorslam/diffcore.hpp"
#include "priorslam/frame_io.hpp"
#include "priorslam/pose.hpp"
#include "priorslam/types.hpp"

namespace priorslam {

inline constexpr int kEmbeddingDim = 8;
using Embedding = Eigen::Matrix<double, kEmbeddingDim, 1>;

/// Integer lattice coordinate. Voxel (i,j,k) spans [i,i+1)x[j,j+1)x[k,k+1) in
/// voxel units; vertex (i,j,k) sits at (i,j,k)*voxel_size.
struct VoxelKey {
  int x = 0;
  int y = 0;
  int z = 0;
  friend auto operator<=>(const VoxelKey&, const VoxelKey&) = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint32_t>(k.x) * 73856093ull;
    h ^= static_cast<std::uint32_t>(k.y) * 19349663ull;
    h ^= static_cast<std::uint32_t>(k.z) * 83492791ull;
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

using VertexKey = VoxelKey;

struct VertexRecord {
  Embedding embedding = Embedding::Zero();
  double weight = 0.0;
};

/// Encoded voxels from a single frame, ready to be fused.
struct LocalVoxelSet {
  double voxel_size = 0.04;
  std::vector<VoxelKey> voxels;
  /// Sorted by key.
  std::vector<std::pair<VertexKey, VertexRecord>> vertices;
};

/// Trilinear stencil of a point inside an allocated voxel.
struct TrilerpStencil {
  std::array<std::uint32_t, 8> vertex{};
  std::array<double, 8> weight{};
  /// Fractional position inside the voxel, each in [0, 1].
  Vec3 frac = Vec3::Zero();
};

/// Corner c of a voxel has offset (c & 1, (c >> 1) & 1, (c >> 2) & 1).
inline VoxelKey corner_key(const VoxelKey& voxel, int c) {
  return {voxel.x + (c & 1), voxel.y + ((c >> 1) & 1), voxel.z + ((c >> 2) & 1)};
}

class SparseVolume {
 public:
  explicit SparseVolume(double voxel_size = 0.04);

  [[nodiscard]] double voxel_size() const { return voxel_size_; }
  [[nodiscard]] VoxelKey voxel_of(const Vec3& p) const;
  [[nodiscard]] bool contains(const Vec3& p) const { return voxels_.count(voxel_of(p)) > 0; }
  [[nodiscard]] bool has_voxel(const VoxelKey& k) const { return voxels_.count(k) > 0; }
  [[nodiscard]] std::size_t voxel_count() const { return voxels_.size(); }
  [[nodiscard]] std::size_t vertex_count() const { return vertex_keys_.size(); }
  [[nodiscard]] bool empty() const { return voxels_.empty(); }

  /// Allocated voxel keys in ascending order.
  [[nodiscard]] std::vector<VoxelKey> sorted_voxels() const;
  [[nodiscard]] const std::array<std::uint32_t, 8>* corners(const VoxelKey& voxel) const;

  /// Allocates the voxel and any missing corner (zero embedding, zero weight).
  void allocate(const VoxelKey& voxel);

  [[nodiscard]] std::optional<std::uint32_t> vertex_index(const VertexKey& key) const;
  [[nodiscard]] const VertexKey& vertex_key(std::uint32_t index) const { return vertex_keys_[index]; }
  [[nodiscard]] Vec3 vertex_position(std::uint32_t index) const;
  [[nodiscard]] double weight(std::uint32_t index) const { return weights_[index]; }
  [[nodiscard]] Embedding embedding(std::uint32_t index) const {
    return Eigen::Map<const Embedding>(embeddings_.values.data() + static_cast<std::size_t>(index) * kEmbeddingDim);
  }
  void set_embedding(std::uint32_t index, const Embedding& e) {
    Eigen::Map<Embedding>(embeddings_.values.data() + static_cast<std::size_t>(index) * kEmbeddingDim) = e;
  }
  void set_weight(std::uint32_t index, double w) { weights_[index] = w; }

  /// Trainable embeddings, 8 per vertex, vertex-major.
  [[nodiscard]] ParamGroup& embeddings() { return embeddings_; }
  [[nodiscard]] const ParamGroup& embeddings() const { return embeddings_; }

  /// Fills the stencil for p; false when p's voxel is not allocated.
  bool stencil(const Vec3& p, TrilerpStencil& out) const;
  /// Stencil of p evaluated in a given allocated voxel, clamping p onto it.
  void stencil_in(const VoxelKey& voxel, const Vec3& p, TrilerpStencil& out) const;

  [[nodiscard]] Embedding interpolate(const TrilerpStencil& s) const;
  /// Throws InputError when p is outside allocated voxels.
  [[nodiscard]] Embedding trilerp(const Vec3& p) const;

  /// Adds d/d(embeddings) of dot(d_embedding, trilerp(p)) into grad and returns
  /// the gradient with respect to p.
  Vec3 trilerp_backward(const TrilerpStencil& s, const Embedding& d_embedding, SparseGrad* grad) const;

 private:
  double voxel_size_;
  std::unordered_map<VoxelKey, std::array<std::uint32_t, 8>, VoxelKeyHash> voxels_;
  std::unordered_map<VertexKey, std::uint32_t, VoxelKeyHash> vertex_index_;
  std::vector<VertexKey> vertex_keys_;
  std::vector<double> weights_;
  ParamGroup embeddings_;
};

/// Three-layer point encoder (3 -> 64 -> 64 -> 9) loaded from an `SPENC1` file.
struct PriorEncoder {
  static constexpr int kHidden = 64;
  static constexpr int kOut = kEmbeddingDim + 1;
  std::vector<float> w1, b1, w2, b2, w3, b3;

  static PriorEncoder load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  /// Outputs for a point offset expressed in voxel units relative to a vertex.
  [[nodiscard]] std::array<double, kOut> forward(const Vec3& offset) const;
};

enum class PriorMode { kAnalytic, kLearned, kNone };

/// Allocates voxels around back-projected points and encodes a prior at every
/// corner vertex that projects onto valid depth. Analytic mode stores the
/// projective TSDF clamp(d_pix - z_v, -tr, tr) / tr in channel 0; weight is the
/// number of points within one voxel (Chebyshev) of the vertex.
/// kNone keeps the allocation and weights but zeroes every embedding.
LocalVoxelSet encode_prior(const Frame& frame, const Intrinsics& K, const PoseParams& T, double tr, double voxel_size,
                           PriorMode mode = PriorMode::kAnalytic, const PriorEncoder* encoder = nullptr);

/// Weighted running mean of embeddings; weights add.
void fuse(SparseVolume& global, const LocalVoxelSet& local);

}  // namespace priorslam
