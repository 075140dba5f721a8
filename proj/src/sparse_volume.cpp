#include "priorslam/sparse_volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace priorslam {

SparseVolume::SparseVolume(double voxel_size) : voxel_size_(voxel_size) {
  if (!(voxel_size > 0.0)) throw InputError("voxel_size must be positive");
  embeddings_.name = "embeddings";
}

VoxelKey SparseVolume::voxel_of(const Vec3& p) const {
  return {static_cast<int>(std::floor(p.x() / voxel_size_)), static_cast<int>(std::floor(p.y() / voxel_size_)),
          static_cast<int>(std::floor(p.z() / voxel_size_))};
}

std::vector<VoxelKey> SparseVolume::sorted_voxels() const {
  std::vector<VoxelKey> keys;
  keys.reserve(voxels_.size());
  for (const auto& [k, _] : voxels_) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  return keys;
}

const std::array<std::uint32_t, 8>* SparseVolume::corners(const VoxelKey& voxel) const {
  auto it = voxels_.find(voxel);
  return it == voxels_.end() ? nullptr : &it->second;
}

void SparseVolume::allocate(const VoxelKey& voxel) {
  if (voxels_.count(voxel)) return;
  std::array<std::uint32_t, 8> ids{};
  for (int c = 0; c < 8; ++c) {
    const VertexKey vk = corner_key(voxel, c);
    auto [it, inserted] = vertex_index_.try_emplace(vk, static_cast<std::uint32_t>(vertex_keys_.size()));
    if (inserted) {
      vertex_keys_.push_back(vk);
      weights_.push_back(0.0);
      embeddings_.values.resize(embeddings_.values.size() + kEmbeddingDim, 0.0);
    }
    ids[c] = it->second;
  }
  voxels_.emplace(voxel, ids);
}

std::optional<std::uint32_t> SparseVolume::vertex_index(const VertexKey& key) const {
  auto it = vertex_index_.find(key);
  if (it == vertex_index_.end()) return std::nullopt;
  return it->second;
}

Vec3 SparseVolume::vertex_position(std::uint32_t index) const {
  const VertexKey& k = vertex_keys_[index];
  return Vec3(k.x, k.y, k.z) * voxel_size_;
}

namespace {

void fill_weights(TrilerpStencil& s) {
  const Vec3& f = s.frac;
  for (int c = 0; c < 8; ++c) {
    const double wx = (c & 1) ? f.x() : 1.0 - f.x();
    const double wy = (c & 2) ? f.y() : 1.0 - f.y();
    const double wz = (c & 4) ? f.z() : 1.0 - f.z();
    s.weight[c] = wx * wy * wz;
  }
}

}  // namespace

bool SparseVolume::stencil(const Vec3& p, TrilerpStencil& out) const {
  const VoxelKey key = voxel_of(p);
  auto it = voxels_.find(key);
  if (it == voxels_.end()) return false;
  out.vertex = it->second;
  out.frac = p / voxel_size_ - Vec3(key.x, key.y, key.z);
  out.frac = out.frac.cwiseMax(0.0).cwiseMin(1.0);
  fill_weights(out);
  return true;
}

void SparseVolume::stencil_in(const VoxelKey& voxel, const Vec3& p, TrilerpStencil& out) const {
  out.vertex = voxels_.at(voxel);
  out.frac = (p / voxel_size_ - Vec3(voxel.x, voxel.y, voxel.z)).cwiseMax(0.0).cwiseMin(1.0);
  fill_weights(out);
}

Embedding SparseVolume::interpolate(const TrilerpStencil& s) const {
  Embedding e = Embedding::Zero();
  for (int c = 0; c < 8; ++c) e += s.weight[c] * embedding(s.vertex[c]);
  return e;
}

Embedding SparseVolume::trilerp(const Vec3& p) const {
  TrilerpStencil s;
  if (!stencil(p, s)) throw InputError("trilerp: point outside allocated voxels");
  return interpolate(s);
}

Vec3 SparseVolume::trilerp_backward(const TrilerpStencil& s, const Embedding& d_embedding, SparseGrad* grad) const {
  if (grad != nullptr) {
    for (int c = 0; c < 8; ++c) {
      double* row = grad->row(s.vertex[c]);
      for (int k = 0; k < kEmbeddingDim; ++k) row[k] += s.weight[c] * d_embedding[k];
    }
  }
  // d weight_c / d frac, then chain through frac = p / voxel_size.
  const Vec3& f = s.frac;
  Vec3 dfrac = Vec3::Zero();
  for (int c = 0; c < 8; ++c) {
    const double proj = d_embedding.dot(embedding(s.vertex[c]));
    const double wx = (c & 1) ? f.x() : 1.0 - f.x();
    const double wy = (c & 2) ? f.y() : 1.0 - f.y();
    const double wz = (c & 4) ? f.z() : 1.0 - f.z();
    const double sx = (c & 1) ? 1.0 : -1.0;
    const double sy = (c & 2) ? 1.0 : -1.0;
    const double sz = (c & 4) ? 1.0 : -1.0;
    dfrac.x() += proj * sx * wy * wz;
    dfrac.y() += proj * wx * sy * wz;
    dfrac.z() += proj * wx * wy * sz;
  }
  return dfrac / voxel_size_;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kEncoderMagic[6] = {'S', 'P', 'E', 'N', 'C', '1'};

void read_floats(std::ifstream& in, std::vector<float>& dst, std::size_t n, const std::filesystem::path& path) {
  dst.resize(n);
  in.read(reinterpret_cast<char*>(dst.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (!in) throw InputError("truncated encoder weight file: " + path.string());
}

template <int In, int Out>
void dense_relu(const std::vector<float>& w, const std::vector<float>& b, const double* x, double* y, bool relu) {
  for (int o = 0; o < Out; ++o) {
    double acc = b[o];
    for (int i = 0; i < In; ++i) acc += static_cast<double>(w[o * In + i]) * x[i];
    y[o] = relu ? std::max(acc, 0.0) : acc;
  }
}

}  // namespace

PriorEncoder PriorEncoder::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open encoder weights: " + path.string());
  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, kEncoderMagic, 6) != 0) throw InputError("bad encoder header (want SPENC1): " + path.string());
  PriorEncoder e;
  read_floats(in, e.w1, 3 * kHidden, path);
  read_floats(in, e.b1, kHidden, path);
  read_floats(in, e.w2, kHidden * kHidden, path);
  read_floats(in, e.b2, kHidden, path);
  read_floats(in, e.w3, kHidden * kOut, path);
  read_floats(in, e.b3, kOut, path);
  return e;
}

void PriorEncoder::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write encoder weights: " + path.string());
  out.write(kEncoderMagic, 6);
  for (const auto* v : {&w1, &b1, &w2, &b2, &w3, &b3}) {
    out.write(reinterpret_cast<const char*>(v->data()), static_cast<std::streamsize>(v->size() * sizeof(float)));
  }
}

std::array<double, PriorEncoder::kOut> PriorEncoder::forward(const Vec3& offset) const {
  double h1[kHidden], h2[kHidden];
  dense_relu<3, kHidden>(w1, b1, offset.data(), h1, true);
  dense_relu<kHidden, kHidden>(w2, b2, h1, h2, true);
  std::array<double, kOut> out{};
  dense_relu<kHidden, kOut>(w3, b3, h2, out.data(), false);
  return out;
}

// ---------------------------------------------------------------------------

LocalVoxelSet encode_prior(const Frame& frame, const Intrinsics& K, const PoseParams& T, double tr, double voxel_size,
                           PriorMode mode, const PriorEncoder* encoder) {
  if (mode == PriorMode::kLearned && encoder == nullptr) throw InputError("learned prior mode needs encoder weights");
  LocalVoxelSet local;
  local.voxel_size = voxel_size;
  const std::vector<Vec3> points = backproject(frame, K, T);
  if (points.empty()) return local;

  struct Accum {
    double count = 0.0;
    Embedding sum = Embedding::Zero();
    double confidence = 0.0;
  };
  std::unordered_map<VertexKey, Accum, VoxelKeyHash> near;
  std::vector<VoxelKey> voxels;
  voxels.reserve(points.size());
  for (const Vec3& p : points) {
    const Vec3 q = p / voxel_size;
    voxels.push_back({static_cast<int>(std::floor(q.x())), static_cast<int>(std::floor(q.y())),
                      static_cast<int>(std::floor(q.z()))});
    // Vertices within one voxel (Chebyshev) of the point.
    const int x0 = static_cast<int>(std::ceil(q.x() - 1.0)), x1 = static_cast<int>(std::floor(q.x() + 1.0));
    const int y0 = static_cast<int>(std::ceil(q.y() - 1.0)), y1 = static_cast<int>(std::floor(q.y() + 1.0));
    const int z0 = static_cast<int>(std::ceil(q.z() - 1.0)), z1 = static_cast<int>(std::floor(q.z() + 1.0));
    for (int x = x0; x <= x1; ++x) {
      for (int y = y0; y <= y1; ++y) {
        for (int z = z0; z <= z1; ++z) {
          Accum& a = near[VertexKey{x, y, z}];
          a.count += 1.0;
          if (mode == PriorMode::kLearned) {
            const auto out = encoder->forward(q - Vec3(x, y, z));
            for (int k = 0; k < kEmbeddingDim; ++k) a.sum[k] += out[k];
            a.confidence += sigmoid(out[kEmbeddingDim]);
          }
        }
      }
    }
  }
  std::sort(voxels.begin(), voxels.end());
  voxels.erase(std::unique(voxels.begin(), voxels.end()), voxels.end());
  local.voxels = voxels;

  std::vector<VertexKey> corners;
  corners.reserve(voxels.size() * 8);
  for (const auto& v : voxels) {
    for (int c = 0; c < 8; ++c) corners.push_back(corner_key(v, c));
  }
  std::sort(corners.begin(), corners.end());
  corners.erase(std::unique(corners.begin(), corners.end()), corners.end());

  for (const VertexKey& vk : corners) {
    const Vec3 pos = Vec3(vk.x, vk.y, vk.z) * voxel_size;
    const auto proj = project(pos, K, T);
    if (!proj) continue;
    const int u = static_cast<int>(std::lround(proj->u));
    const int v = static_cast<int>(std::lround(proj->v));
    if (u < 0 || v < 0 || u >= frame.width || v >= frame.height) continue;
    const double d_pix = frame.depth_at(u, v);
    if (d_pix <= 0.0) continue;
    const Accum& a = near.at(vk);
    VertexRecord rec;
    switch (mode) {
      case PriorMode::kAnalytic:
        rec.embedding[0] = std::clamp(d_pix - proj->depth, -tr, tr) / tr;
        rec.weight = a.count;
        break;
      case PriorMode::kLearned:
        rec.embedding = a.sum / a.count;
        rec.weight = a.confidence;
        break;
      case PriorMode::kNone:
        rec.weight = a.count;
        break;
    }
    local.vertices.emplace_back(vk, rec);
  }
  return local;
}

void fuse(SparseVolume& global, const LocalVoxelSet& local) {
  if (std::abs(local.voxel_size - global.voxel_size()) > 1e-12) throw InputError("fuse: voxel size mismatch");
  for (const auto& v : local.voxels) global.allocate(v);
  for (const auto& [key, rec] : local.vertices) {
    auto idx = global.vertex_index(key);
    if (!idx) continue;  // not a corner of any allocated voxel
    const double wg = global.weight(*idx);
    const double total = wg + rec.weight;
    if (!(total > 0.0)) continue;
    global.set_embedding(*idx, (global.embedding(*idx) * wg + rec.embedding * rec.weight) / total);
    global.set_weight(*idx, total);
  }
}

}  // namespace priorslam
