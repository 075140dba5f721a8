#include <cmath>

#include "helpers.hpp"
#include "priorslam/decoders.hpp"

using namespace priorslam;
using namespace testutil;

namespace {

Embedding random_embedding(Rng& rng, double scale = 1.0) {
  Embedding e;
  for (int k = 0; k < kEmbeddingDim; ++k) e[k] = uniform(rng, -scale, scale);
  return e;
}

PlaneFeature random_feature(Rng& rng, double scale = 1.0) {
  PlaneFeature f;
  for (int k = 0; k < kPlaneChannels; ++k) f[k] = uniform(rng, -scale, scale);
  return f;
}

}  // namespace

TEST_CASE("geometry decoder output stays in (-1, 1) and color in (0, 1)") {
  Rng rng(51);
  GeometryDecoder g;
  g.init_random(rng);
  ColorDecoder c;
  c.init_random(rng);
  for (int i = 0; i < 1000000; ++i) {
    const double scale = (i % 3 == 0) ? 100.0 : 1.0;
    const double s = g.decode(random_vec(rng), random_embedding(rng, scale));
    REQUIRE(std::abs(s) <= 1.0);
    REQUIRE(std::isfinite(s));
    if (i % 4 == 0) {
      const Vec3 rgb = c.decode(random_feature(rng, scale));
      REQUIRE((rgb.array() >= 0.0).all());
      REQUIRE((rgb.array() <= 1.0).all());
    }
  }
  // Saturation can round to the bounds; strict inequality holds for moderate inputs.
  for (int i = 0; i < 1000; ++i) {
    CHECK(std::abs(g.decode(random_vec(rng), random_embedding(rng))) < 1.0);
    const Vec3 rgb = c.decode(random_feature(rng));
    CHECK(((rgb.array() > 0.0) && (rgb.array() < 1.0)).all());
  }
}

TEST_CASE("passthrough decoder reproduces tanh(tr * e0)") {
  Rng rng(52);
  GeometryDecoder g;
  const double tr = 0.08;
  g.init_passthrough(tr, rng);
  for (int i = 0; i < 200; ++i) {
    const double x = uniform(rng, -1, 1);
    Embedding e = Embedding::Zero();
    e[0] = x;
    CHECK(std::abs(g.decode(random_vec(rng), e) - std::tanh(x * tr)) < 1e-6);
  }
}

TEST_CASE("zero feature through a zeroed output layer is mid gray") {
  Rng rng(53);
  ColorDecoder c;
  c.init_random(rng);
  c.zero_output_layer();
  CHECK(c.decode(PlaneFeature::Zero()) == Vec3(0.5, 0.5, 0.5));
  CHECK(c.decode(random_feature(rng)) == Vec3(0.5, 0.5, 0.5));
}

TEST_CASE("decoders are deterministic") {
  Rng a(54), b(54);
  GeometryDecoder ga, gb;
  ga.init_random(a);
  gb.init_random(b);
  CHECK(ga.net.params.values == gb.net.params.values);
  Rng rng(55);
  const Vec3 p = random_vec(rng);
  const Embedding e = random_embedding(rng);
  CHECK(ga.decode(p, e) == gb.decode(p, e));
  CHECK(ga.decode(p, e) == ga.decode(p, e));
}

TEST_CASE("geometry decoder gradients match finite differences") {
  Rng rng(56);
  GeometryDecoder g;
  using Net = GeometryDecoder::Net;
  for (int trial = 0; trial < 100; ++trial) {
    g.init_random(rng);
    const Vec3 p0 = random_vec(rng);
    const Embedding e0 = random_embedding(rng);
    const double weight = uniform(rng, 0.5, 2.0);
    std::vector<double> x = g.net.params.values;
    x.insert(x.end(), p0.data(), p0.data() + 3);
    x.insert(x.end(), e0.data(), e0.data() + kEmbeddingDim);
    GradientFunction fn = [&](std::span<const double> v, std::span<double> grad) {
      std::copy(v.begin(), v.begin() + Net::kParamCount, g.net.params.values.begin());
      const Vec3 p(v[Net::kParamCount], v[Net::kParamCount + 1], v[Net::kParamCount + 2]);
      Embedding e;
      for (int k = 0; k < kEmbeddingDim; ++k) e[k] = v[Net::kParamCount + 3 + k];
      GeometryDecoder::Cache cache;
      const double s = g.decode(p, e, &cache);
      if (!grad.empty()) {
        SparseGrad sg = g.net.make_grad();
        Vec3 dp;
        Embedding de;
        g.backward(cache, weight, &dp, &de, &sg);
        for (std::size_t i = 0; i < Net::kParamCount; ++i) grad[i] = sg[i];
        for (int i = 0; i < 3; ++i) grad[Net::kParamCount + i] = dp[i];
        for (int k = 0; k < kEmbeddingDim; ++k) grad[Net::kParamCount + 3 + k] = de[k];
      }
      return weight * s;
    };
    CHECK(finite_difference_check(fn, x) < 1e-4);
  }
}

TEST_CASE("color decoder gradients match finite differences") {
  Rng rng(57);
  ColorDecoder c;
  using Net = ColorDecoder::Net;
  for (int trial = 0; trial < 100; ++trial) {
    c.init_random(rng);
    const PlaneFeature f0 = random_feature(rng);
    const Vec3 w = random_vec(rng);
    std::vector<double> x = c.net.params.values;
    x.insert(x.end(), f0.data(), f0.data() + kPlaneChannels);
    GradientFunction fn = [&](std::span<const double> v, std::span<double> grad) {
      std::copy(v.begin(), v.begin() + Net::kParamCount, c.net.params.values.begin());
      PlaneFeature f;
      for (int k = 0; k < kPlaneChannels; ++k) f[k] = v[Net::kParamCount + k];
      ColorDecoder::Cache cache;
      const Vec3 rgb = c.decode(f, &cache);
      if (!grad.empty()) {
        SparseGrad sg = c.net.make_grad();
        PlaneFeature df;
        c.backward(cache, w, &df, &sg);
        for (std::size_t i = 0; i < Net::kParamCount; ++i) grad[i] = sg[i];
        for (int k = 0; k < kPlaneChannels; ++k) grad[Net::kParamCount + k] = df[k];
      }
      return w.dot(rgb);
    };
    CHECK(finite_difference_check(fn, x) < 1e-4);
  }
}

TEST_CASE("mlp parameter layout") {
  using Net = Mlp<2, 3, 1>;
  Net net;
  CHECK(Net::kParamCount == 2 * 3 + 3 + 3 + 1);
  // Hidden unit j = relu(W1[j] . x + b1[j]); y = W2 . h + b2.
  net.params.values = {1, 0, 0, 1, 1, 1, 0, 0, -5, 2, 3, 4, 0.5};
  const double x[2] = {2.0, 3.0};
  double y;
  net.forward(x, &y, nullptr);
  CHECK(y == 2 * 2.0 + 3 * 3.0 + 4 * 0.0 + 0.5);
}
