#include "priorslam/decoders.hpp"

namespace priorslam {

void GeometryDecoder::init_passthrough(double tr, Rng& rng) {
  auto& p = net.params.values;
  std::fill(p.begin(), p.end(), 0.0);
  constexpr int kIn = Net::kIn;
  constexpr int kE0 = 3;  // input slot of embedding channel 0
  p[Net::kW1 + 0 * kIn + kE0] = 1.0;
  p[Net::kW1 + 1 * kIn + kE0] = -1.0;
  p[Net::kW2 + 0] = tr;
  p[Net::kW2 + 1] = -tr;
  std::normal_distribution<double> small(0.0, 0.1);
  for (int j = 2; j < Net::kHidden; ++j) {
    for (int i = 0; i < kIn; ++i) p[Net::kW1 + static_cast<std::size_t>(j) * kIn + i] = small(rng);
    p[Net::kB1 + j] = std::abs(small(rng));
  }
}

double GeometryDecoder::decode(const Vec3& normalized_p, const Embedding& e, Cache* cache) const {
  std::array<double, Net::kIn> x;
  x[0] = normalized_p.x();
  x[1] = normalized_p.y();
  x[2] = normalized_p.z();
  for (int k = 0; k < kEmbeddingDim; ++k) x[3 + k] = e[k];
  double y;
  net.forward(x.data(), &y, cache ? &cache->net : nullptr);
  const double s = std::tanh(y);
  if (cache) cache->s = s;
  return s;
}

void GeometryDecoder::backward(const Cache& cache, double ds, Vec3* d_p, Embedding* d_e, SparseGrad* grad) const {
  const double dy = ds * (1.0 - cache.s * cache.s);
  std::array<double, Net::kIn> dx;
  net.backward(cache.net, &dy, dx.data(), grad);
  if (d_p) *d_p = Vec3(dx[0], dx[1], dx[2]);
  if (d_e) {
    for (int k = 0; k < kEmbeddingDim; ++k) (*d_e)[k] = dx[3 + k];
  }
}

void ColorDecoder::zero_output_layer() {
  auto& p = net.params.values;
  std::fill(p.begin() + Net::kW2, p.end(), 0.0);
}

Vec3 ColorDecoder::decode(const PlaneFeature& f, Cache* cache) const {
  double y[3];
  net.forward(f.data(), y, cache ? &cache->net : nullptr);
  const Vec3 rgb(sigmoid(y[0]), sigmoid(y[1]), sigmoid(y[2]));
  if (cache) cache->rgb = rgb;
  return rgb;
}

void ColorDecoder::backward(const Cache& cache, const Vec3& d_rgb, PlaneFeature* d_f, SparseGrad* grad) const {
  double dy[3];
  for (int k = 0; k < 3; ++k) dy[k] = d_rgb[k] * cache.rgb[k] * (1.0 - cache.rgb[k]);
  std::array<double, kPlaneChannels> dx;
  net.backward(cache.net, dy, d_f ? dx.data() : nullptr, grad);
  if (d_f) {
    for (int k = 0; k < kPlaneChannels; ++k) (*d_f)[k] = dx[k];
  }
}

}  // namespace priorslam
