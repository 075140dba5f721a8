#include "helpers.hpp"
#include "priorslam/triplane.hpp"

using namespace priorslam;
using namespace testutil;

namespace {

const Aabb kBox{Vec3(-0.2, -0.1, 0.0), Vec3(0.2, 0.14, 0.3)};

PlaneFeature node_feature(const TriPlanes& t, int plane, int i, int j) {
  return Eigen::Map<const PlaneFeature>(t.features().values.data() +
                                        static_cast<std::size_t>(t.node_row(plane, i, j)) * kPlaneChannels);
}

PlaneFeature bilinear_oracle(const TriPlanes& t, int plane, double x, double y) {
  const int i = static_cast<int>(std::floor(x)), j = static_cast<int>(std::floor(y));
  const double fx = x - i, fy = y - j;
  return (1 - fx) * (1 - fy) * node_feature(t, plane, i, j) + fx * (1 - fy) * node_feature(t, plane, i + 1, j) +
         (1 - fx) * fy * node_feature(t, plane, i, j + 1) + fx * fy * node_feature(t, plane, i + 1, j + 1);
}

}  // namespace

TEST_CASE("grid covers the bounds") {
  const TriPlanes t(kBox, 0.04);
  CHECK(t.node_counts() == std::array<int, 3>{11, 7, 9});
  CHECK((t.bounds().max.array() >= kBox.max.array() - 1e-12).all());
  CHECK(t.features().values.size() == static_cast<std::size_t>(11 * 7 + 11 * 9 + 7 * 9) * kPlaneChannels);
  CHECK_THROWS_AS(TriPlanes(kBox, 0.0), InputError);
  CHECK_THROWS_AS(TriPlanes(Aabb{Vec3::Zero(), Vec3(1, 0, 1)}, 0.04), InputError);
}

TEST_CASE("zero features give a zero feature") {
  const TriPlanes t(kBox, 0.04);
  CHECK(t.project_features(Vec3(0.01, 0.02, 0.1)) == PlaneFeature::Zero());
}

TEST_CASE("shared grid node returns the sum of three node features") {
  Rng rng(41);
  TriPlanes t(kBox, 0.04);
  t.randomize(rng, 1.0);
  const int i = 3, j = 2, k = 4;
  const Vec3 p = kBox.min + Vec3(i, j, k) * 0.04;
  const PlaneFeature expected = node_feature(t, 0, i, j) + node_feature(t, 1, i, k) + node_feature(t, 2, j, k);
  CHECK((t.project_features(p) - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("random points match the explicit bilinear sum") {
  Rng rng(42);
  TriPlanes t(kBox, 0.04);
  t.randomize(rng, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const Vec3 p(uniform(rng, kBox.min.x(), kBox.max.x() - 1e-9), uniform(rng, kBox.min.y(), kBox.max.y() - 1e-9),
                 uniform(rng, kBox.min.z(), kBox.max.z() - 1e-9));
    const Vec3 g = (p - kBox.min) / 0.04;
    const PlaneFeature oracle =
        bilinear_oracle(t, 0, g.x(), g.y()) + bilinear_oracle(t, 1, g.x(), g.z()) + bilinear_oracle(t, 2, g.y(), g.z());
    CHECK((t.project_features(p) - oracle).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("each bilinear term is a convex combination") {
  Rng rng(43);
  TriPlanes t(kBox, 0.04);
  for (int trial = 0; trial < 100; ++trial) {
    PlaneStencil s;
    t.stencil(Vec3(uniform(rng, -0.2, 0.2), uniform(rng, -0.1, 0.14), uniform(rng, 0.0, 0.3)), s);
    for (int pl = 0; pl < 3; ++pl) {
      double sum = 0.0;
      for (int k = 0; k < 4; ++k) {
        CHECK(s.weight[pl * 4 + k] >= 0.0);
        sum += s.weight[pl * 4 + k];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("scaling one plane scales its contribution exactly") {
  Rng rng(44);
  TriPlanes t(kBox, 0.04);
  t.randomize(rng, 1.0);
  const Vec3 p(0.013, -0.021, 0.17);
  TriPlanes only_xy = t;
  const std::uint32_t xz_begin = t.node_row(1, 0, 0) * kPlaneChannels;
  for (std::size_t i = xz_begin; i < only_xy.features().values.size(); ++i) only_xy.features().values[i] = 0.0;
  const PlaneFeature base = t.project_features(p), xy = only_xy.project_features(p);
  TriPlanes scaled = t;
  for (std::size_t i = 0; i < xz_begin; ++i) scaled.features().values[i] *= 2.0;
  CHECK((scaled.project_features(p) - (base + xy)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("feature gradient equals bilinear weights and point gradient passes FD") {
  Rng rng(45);
  TriPlanes t(kBox, 0.04);
  t.randomize(rng, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    PlaneFeature g;
    for (int c = 0; c < kPlaneChannels; ++c) g[c] = uniform(rng, -1, 1);
    // Keep away from grid lines so the central differences stay on one bilinear patch.
    const Vec3 cell(static_cast<double>(rng() % 10), static_cast<double>(rng() % 6), static_cast<double>(rng() % 7));
    const Vec3 frac(uniform(rng, 0.05, 0.95), uniform(rng, 0.05, 0.95), uniform(rng, 0.05, 0.95));
    const Vec3 p0 = kBox.min + (cell + frac) * 0.04;
    PlaneStencil s0;
    t.stencil(p0, s0);
    // Parameters: the 12 touched node features followed by p.
    std::vector<std::size_t> index;
    for (int k = 0; k < 12; ++k)
      for (int c = 0; c < kPlaneChannels; ++c) index.push_back(s0.node[k] * kPlaneChannels + c);
    std::sort(index.begin(), index.end());
    index.erase(std::unique(index.begin(), index.end()), index.end());
    std::vector<double> x;
    for (std::size_t i : index) x.push_back(t.features().values[i]);
    x.insert(x.end(), {p0.x(), p0.y(), p0.z()});
    const std::size_t nf = index.size();
    GradientFunction fn = [&](std::span<const double> v, std::span<double> grad) {
      for (std::size_t i = 0; i < nf; ++i) t.features().values[index[i]] = v[i];
      PlaneStencil s;
      t.stencil(Vec3(v[nf], v[nf + 1], v[nf + 2]), s);
      const double out = g.dot(t.interpolate(s));
      if (!grad.empty()) {
        SparseGrad sg(t.features().values.size(), kPlaneChannels);
        const Vec3 dp = t.backward(s, g, &sg);
        for (std::size_t i = 0; i < nf; ++i) grad[i] = sg[index[i]];
        for (int a = 0; a < 3; ++a) grad[nf + a] = dp[a];
      }
      return out;
    };
    CHECK(finite_difference_check(fn, x, 1e-5) < 1e-6);

    SparseGrad unit(t.features().values.size(), kPlaneChannels);
    t.backward(s0, PlaneFeature::Constant(1.0), &unit);
    for (int k = 0; k < 12; ++k) {
      double expected = 0.0;
      for (int m = 0; m < 12; ++m)
        if (s0.node[m] == s0.node[k]) expected += s0.weight[m];
      CHECK(unit[s0.node[k] * kPlaneChannels] == doctest::Approx(expected).epsilon(1e-15));
    }
  }
}

TEST_CASE("out-of-bounds queries clamp and are counted") {
  Rng rng(46);
  TriPlanes t(kBox, 0.04);
  t.randomize(rng, 1.0);
  CHECK(t.clamp_count() == 0);
  const PlaneFeature inside = t.project_features(Vec3(0.2, 0.0, 0.1));
  const PlaneFeature outside = t.project_features(Vec3(5.0, 0.0, 0.1));
  CHECK(t.clamp_count() == 1);
  CHECK((inside - outside).cwiseAbs().maxCoeff() < 1e-12);
  PlaneStencil s;
  t.stencil(Vec3(5.0, 0.0, 0.1), s);
  CHECK(t.backward(s, PlaneFeature::Ones(), nullptr).x() == 0.0);
}
