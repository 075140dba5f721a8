#include "helpers.hpp"
#include "priorslam/objective.hpp"

using namespace priorslam;
using namespace testutil;

namespace {

RaySampleBatch batch_from(const std::vector<double>& z, const std::vector<double>& s) {
  RaySampleBatch b;
  b.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    b.z[i] = z[i];
    b.sdf[i] = s[i];
    b.color[i] = Vec3(0.5, 0.5, 0.5);
    b.inside[i] = 1;
  }
  return b;
}

}  // namespace

TEST_CASE("classify_sample examples") {
  CHECK(classify_sample(2.0, 2.0, 0.08) == SampleClass::kTruncation);
  CHECK(classify_sample(1.0, 2.0, 0.08) == SampleClass::kFreeSpace);
  CHECK(classify_sample(2.16, 2.0, 0.08) == SampleClass::kBehind);
  CHECK(classify_sample(1.925, 2.0, 0.08) == SampleClass::kTruncation);
  const std::vector<double> z{0.5, 1.95, 2.0, 3.0};
  const SamplePartition p = classify_samples(z, 2.0, 0.08);
  CHECK(p.free_space == std::vector<std::size_t>{0});
  CHECK(p.truncation == std::vector<std::size_t>{1, 2});
  CHECK(p.behind == std::vector<std::size_t>{3});
}

TEST_CASE("exact fit gives zero loss") {
  const double D = 2.0, tr = 0.08;
  const std::vector<double> z{0.5, 1.0, 1.95, 2.0, 2.05};
  std::vector<double> s;
  for (double zi : z) s.push_back(zi < D - tr ? tr : D - zi);
  RenderedRay ray;
  ray.samples = batch_from(z, s);
  ray.rendered.color = Vec3(0.2, 0.4, 0.6);
  ray.rendered.depth = D;
  ray.observed_color = Vec3(0.2, 0.4, 0.6);
  ray.observed_depth = D;
  const LossTerms t = compute_losses(std::span<const RenderedRay>(&ray, 1), tr, ObjectiveWeights{});
  CHECK(t.rgb == 0.0);
  CHECK(t.depth == 0.0);
  CHECK(t.fs == 0.0);
  CHECK(t.sdf == 0.0);
  CHECK(t.total == 0.0);
}

TEST_CASE("one truncation sample with s = 0.05 and D - z = 0.03") {
  RenderedRay ray;
  ray.samples = batch_from({1.97}, {0.05});
  ray.rendered.depth = 2.0;
  ray.observed_depth = 2.0;
  const LossTerms t = compute_losses(std::span<const RenderedRay>(&ray, 1), 0.08, ObjectiveWeights{});
  CHECK(t.sdf == doctest::Approx(4e-4).epsilon(1e-12));
}

TEST_CASE("weighted total of unit terms") {
  LossTerms t{1.0, 1.0, 1.0, 1.0, 0.0};
  t.finalize(ObjectiveWeights{});
  CHECK(t.total == doctest::Approx(1030.1).epsilon(1e-15));
  ObjectiveWeights w2{20, 0.2, 40, 2000};
  LossTerms t2{0.3, 0.7, 0.11, 0.013, 0.0}, t1 = t2;
  t1.finalize(ObjectiveWeights{});
  t2.finalize(w2);
  CHECK(t2.total == 2.0 * t1.total);
}

TEST_CASE("loss terms follow their definitions") {
  Rng rng(71);
  const double tr = 0.08;
  std::vector<RenderedRay> rays(5);
  double rgb = 0, depth = 0, fs = 0, sdf = 0;
  for (auto& r : rays) {
    const double D = uniform(rng, 0.5, 3.0);
    std::vector<double> z, s;
    for (int i = 0; i < 20; ++i) {
      z.push_back(uniform(rng, 0.2 * D, D + 3 * tr));
      s.push_back(uniform(rng, -0.1, 0.1));
    }
    r.samples = batch_from(z, s);
    r.samples.inside[3] = 0;  // outside samples never enter geometric losses
    r.rendered.color = random_vec(rng, 0, 1);
    r.rendered.depth = uniform(rng, 0.5, 3.0);
    r.observed_color = random_vec(rng, 0, 1);
    r.observed_depth = D;
    rgb += (r.rendered.color - r.observed_color).squaredNorm();
    depth += (r.rendered.depth - D) * (r.rendered.depth - D);
    double f = 0, t = 0;
    int nf = 0, nt = 0;
    for (int i = 0; i < 20; ++i) {
      if (i == 3) continue;
      if (std::abs(D - z[i]) <= tr) {
        t += (s[i] - (D - z[i])) * (s[i] - (D - z[i]));
        ++nt;
      } else if (z[i] < D - tr) {
        f += (s[i] - tr) * (s[i] - tr);
        ++nf;
      }
    }
    fs += nf ? f / nf : 0.0;
    sdf += nt ? t / nt : 0.0;
  }
  const LossTerms got = compute_losses(rays, tr, ObjectiveWeights{});
  CHECK(got.rgb == doctest::Approx(rgb / 5).epsilon(1e-13));
  CHECK(got.depth == doctest::Approx(depth / 5).epsilon(1e-13));
  CHECK(got.fs == doctest::Approx(fs / 5).epsilon(1e-13));
  CHECK(got.sdf == doctest::Approx(sdf / 5).epsilon(1e-13));
  CHECK(got.total == doctest::Approx(10 * got.rgb + 0.1 * got.depth + 20 * got.fs + 1000 * got.sdf).epsilon(1e-15));
  CHECK(got.rgb >= 0);
  CHECK(got.fs >= 0);
}

TEST_CASE("samples behind the band do not change sdf or free-space terms") {
  Rng rng(72);
  const double D = 1.5, tr = 0.08;
  RenderedRay a;
  a.samples = batch_from({0.6, 1.0, 1.45, 1.5, 1.55, 1.7, 2.0}, {0.07, 0.05, 0.02, 0.01, -0.03, 0.0, 0.0});
  a.rendered.depth = 1.5;
  a.observed_depth = D;
  RenderedRay b = a;
  b.samples.sdf[5] = 0.9;
  b.samples.sdf[6] = -0.4;
  const LossTerms la = compute_losses(std::span<const RenderedRay>(&a, 1), tr, ObjectiveWeights{});
  const LossTerms lb = compute_losses(std::span<const RenderedRay>(&b, 1), tr, ObjectiveWeights{});
  CHECK(la.sdf == lb.sdf);
  CHECK(la.fs == lb.fs);
}

TEST_CASE("empty bands contribute zero and all-excluded batches throw") {
  RenderedRay r;
  r.samples = batch_from({3.0}, {0.0});
  r.rendered.depth = 1.0;
  r.observed_depth = 1.0;
  const LossTerms t = compute_losses(std::span<const RenderedRay>(&r, 1), 0.08, ObjectiveWeights{});
  CHECK(t.sdf == 0.0);
  CHECK(t.fs == 0.0);
  r.rendered.excluded = true;
  CHECK_THROWS_AS(compute_losses(std::span<const RenderedRay>(&r, 1), 0.08, ObjectiveWeights{}), InputError);
}

TEST_CASE("ray loss gradients match finite differences for every term") {
  Rng rng(73);
  const double tr = 0.08;
  for (int trial = 0; trial < 100; ++trial) {
    const double D = uniform(rng, 0.8, 2.5);
    std::vector<double> z;
    for (int i = 0; i < 16; ++i) z.push_back(uniform(rng, 0.2 * D, D + 2 * tr));
    std::sort(z.begin(), z.end());
    RaySampleBatch b = batch_from(z, std::vector<double>(16, 0.0));
    const Vec3 C = random_vec(rng, 0, 1);
    // Each weight set isolates one term so every loss is checked on its own.
    const int term = trial % 4;
    ObjectiveWeights w{term == 0 ? 10.0 : 0.0, term == 1 ? 0.1 : 0.0, term == 2 ? 20.0 : 0.0, term == 3 ? 1000.0 : 0.0};
    std::vector<double> x;
    for (int i = 0; i < 16; ++i) x.push_back(uniform(rng, -0.1, 0.1));
    const Vec3 c0 = random_vec(rng, 0, 1);
    x.insert(x.end(), {c0.x(), c0.y(), c0.z(), uniform(rng, 0.5, 3.0)});
    GradientFunction fn = [&](std::span<const double> v, std::span<double> g) {
      for (int i = 0; i < 16; ++i) b.sdf[i] = v[i];
      Rendered r;
      r.color = Vec3(v[16], v[17], v[18]);
      r.depth = v[19];
      std::vector<double> ds(16);
      const RayLoss l = ray_loss(b, r, C, D, tr, w, ds);
      LossTerms t = l.terms;
      t.finalize(w);
      if (!g.empty()) {
        for (int i = 0; i < 16; ++i) g[i] = ds[i];
        for (int c = 0; c < 3; ++c) g[16 + c] = l.d_color[c];
        g[19] = l.d_depth;
      }
      return t.total;
    };
    CHECK(finite_difference_check(fn, x) < 1e-4);
  }
}
