#pragma once

#include <array>
#include <cmath>
#include <string>

#include "priorslam/diffcore.hpp"
#include "priorslam/sparse_volume.hpp"
#include "priorslam/triplane.hpp"
#include "priorslam/types.hpp"

namespace priorslam {

/// Two dense layers with a ReLU between them and a linear output. Parameters
/// live in one flat group laid out as W1 (Hidden x In, row-major), b1, W2
/// (Out x Hidden), b2.
template <int In, int Hidden, int Out>
class Mlp {
 public:
  static constexpr int kIn = In;
  static constexpr int kHidden = Hidden;
  static constexpr int kOut = Out;
  static constexpr std::size_t kW1 = 0;
  static constexpr std::size_t kB1 = kW1 + Hidden * In;
  static constexpr std::size_t kW2 = kB1 + Hidden;
  static constexpr std::size_t kB2 = kW2 + Out * Hidden;
  static constexpr std::size_t kParamCount = kB2 + Out;

  struct Cache {
    std::array<double, In> x{};
    std::array<double, Hidden> h{};  // post-activation
  };

  explicit Mlp(std::string name = "mlp") {
    params.name = std::move(name);
    params.values.assign(kParamCount, 0.0);
  }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
  void randomize(Rng& rng) {
    std::uniform_real_distribution<double> l1(-1.0 / std::sqrt(In), 1.0 / std::sqrt(In));
    std::uniform_real_distribution<double> l2(-1.0 / std::sqrt(Hidden), 1.0 / std::sqrt(Hidden));
    for (std::size_t i = kW1; i < kW2; ++i) params.values[i] = l1(rng);
    for (std::size_t i = kW2; i < kParamCount; ++i) params.values[i] = l2(rng);
  }

  void forward(const double* x, double* y, Cache* cache) const {
    const double* p = params.values.data();
    std::array<double, Hidden> h;
    for (int j = 0; j < Hidden; ++j) {
      double acc = p[kB1 + j];
      const double* w = p + kW1 + static_cast<std::size_t>(j) * In;
      for (int i = 0; i < In; ++i) acc += w[i] * x[i];
      h[j] = acc > 0.0 ? acc : 0.0;
    }
    for (int o = 0; o < Out; ++o) {
      double acc = p[kB2 + o];
      const double* w = p + kW2 + static_cast<std::size_t>(o) * Hidden;
      for (int j = 0; j < Hidden; ++j) acc += w[j] * h[j];
      y[o] = acc;
    }
    if (cache != nullptr) {
      std::copy(x, x + In, cache->x.begin());
      cache->h = h;
    }
  }

  /// Given dL/dy, writes dL/dx (if d_x) and accumulates parameter gradients (if grad).
  void backward(const Cache& cache, const double* d_y, double* d_x, SparseGrad* grad) const {
    const double* p = params.values.data();
    std::array<double, Hidden> dh{};
    for (int o = 0; o < Out; ++o) {
      const double* w = p + kW2 + static_cast<std::size_t>(o) * Hidden;
      for (int j = 0; j < Hidden; ++j) dh[j] += d_y[o] * w[j];
    }
    for (int j = 0; j < Hidden; ++j) {
      if (cache.h[j] <= 0.0) dh[j] = 0.0;
    }
    if (grad != nullptr) {
      double* g = grad->row(0);
      for (int o = 0; o < Out; ++o) {
        double* gw = g + kW2 + static_cast<std::size_t>(o) * Hidden;
        for (int j = 0; j < Hidden; ++j) gw[j] += d_y[o] * cache.h[j];
        g[kB2 + o] += d_y[o];
      }
      for (int j = 0; j < Hidden; ++j) {
        if (dh[j] == 0.0) continue;
        double* gw = g + kW1 + static_cast<std::size_t>(j) * In;
        for (int i = 0; i < In; ++i) gw[i] += dh[j] * cache.x[i];
        g[kB1 + j] += dh[j];
      }
    }
    if (d_x != nullptr) {
      for (int i = 0; i < In; ++i) d_x[i] = 0.0;
      for (int j = 0; j < Hidden; ++j) {
        if (dh[j] == 0.0) continue;
        const double* w = p + kW1 + static_cast<std::size_t>(j) * In;
        for (int i = 0; i < In; ++i) d_x[i] += dh[j] * w[i];
      }
    }
  }

  [[nodiscard]] SparseGrad make_grad() const { return SparseGrad(kParamCount, kParamCount); }

  ParamGroup params;
};

/// Maps a normalized point and its voxel embedding to a tanh-bounded SDF (meters).
class GeometryDecoder {
 public:
  using Net = Mlp<3 + kEmbeddingDim, 32, 1>;
  struct Cache {
    Net::Cache net;
    double s = 0.0;
  };

  GeometryDecoder() : net("geometry_decoder") {}

  /// Random weights everywhere (used by the no-prior ablation when requested).
  void init_random(Rng& rng) { net.randomize(rng); }

  /// Output equals tanh(tr * e[0]) for any input until training moves it: two
  /// hidden units carry +/-e[0] through the ReLU and the output layer reads
  /// them with weights +/-tr. The remaining hidden units get small random input
  /// weights and zero output weights.
  void init_passthrough(double tr, Rng& rng);

  [[nodiscard]] double decode(const Vec3& normalized_p, const Embedding& e, Cache* cache = nullptr) const;

  /// Chain rule from ds to the decoder inputs and parameters.
  void backward(const Cache& cache, double ds, Vec3* d_p, Embedding* d_e, SparseGrad* grad) const;

  Net net;
};

/// Maps a tri-plane feature to RGB in (0, 1).
class ColorDecoder {
 public:
  using Net = Mlp<kPlaneChannels, 32, 3>;
  struct Cache {
    Net::Cache net;
    Vec3 rgb = Vec3::Zero();
  };

  ColorDecoder() : net("color_decoder") {}

  void init_random(Rng& rng) { net.randomize(rng); }
  void zero_output_layer();

  [[nodiscard]] Vec3 decode(const PlaneFeature& f, Cache* cache = nullptr) const;
  void backward(const Cache& cache, const Vec3& d_rgb, PlaneFeature* d_f, SparseGrad* grad) const;

  Net net;
};

}  // namespace priorslam
