#include "helpers.hpp"
#include "priorslam/config.hpp"

using namespace priorslam;

TEST_CASE("an empty config resolves to the documented defaults") {
  const SystemConfig c = parse_config_text("");
  CHECK(c.scene.voxel_size == 0.04);
  CHECK(c.sampling.tr == 0.08);
  CHECK(c.sampling.n_coarse == 32);
  CHECK(c.sampling.n_fine == 11);
  CHECK(c.tracking.iterations == 4);
  CHECK(c.tracking.pixels == 1024);
  CHECK(c.tracking.lr_rotation == 0.001);
  CHECK(c.tracking.lr_translation == 0.002);
  CHECK(c.mapping.interval == 5);
  CHECK(c.mapping.iterations == 20);
  CHECK(c.mapping.pixels == 2048);
  CHECK(c.mapping.pixels_per_frame == 15000);
  CHECK(c.mapping.selection.recent == 20);
  CHECK(c.mapping.selection.covisible == 90);
  CHECK(c.mapping.selection.random == 90);
  CHECK(c.mapping.selection.budget() == 200);
  CHECK(c.mapping.selection.min_covisibility == 0.10);
  CHECK(c.mapping.lr_embeddings == 0.004);
  CHECK(c.mapping.lr_planes == 0.004);
  CHECK(c.mapping.lr_decoders == 0.001);
  CHECK(c.mapping.lr_poses == 0.001);
  CHECK(c.mapping.strategy == MappingStrategy::kAllFrames);
  CHECK(c.weights.rgb == 10.0);
  CHECK(c.weights.depth == 0.1);
  CHECK(c.weights.fs == 20.0);
  CHECK(c.weights.sdf == 1000.0);
  CHECK(c.eval.samples == 100000);
  CHECK(c.eval.threshold == 0.05);
}

TEST_CASE("overrides, comments and the keyframe strategy") {
  const SystemConfig c = parse_config_text(
      "# comment line\n"
      "\n"
      "mapping.strategy = keyframe\n"
      "tracking.iters = 6   # real data\n"
      "mapping.interval = inf\n"
      "scene.bounds_min = -1 -2 -3\n"
      "scene.bounds_max = 1 2 3\n");
  CHECK(c.mapping.strategy == MappingStrategy::kKeyframe);
  CHECK(c.tracking.iterations == 6);
  CHECK(c.mapping.interval == 0);
  REQUIRE(c.scene.bounds.has_value());
  CHECK(c.scene.bounds->min == Vec3(-1, -2, -3));
  CHECK(c.scene.bounds->max == Vec3(1, 2, 3));
}

TEST_CASE("invalid configs are rejected") {
  CHECK_THROWS_AS(parse_config_text("tracking.iters = -1\n"), InputError);
  CHECK_THROWS_AS(parse_config_text("tracking.bogus = 1\n"), InputError);
  CHECK_THROWS_AS(parse_config_text("just some words\n"), InputError);
  CHECK_THROWS_AS(parse_config_text("sampling.truncation = 0\n"), InputError);
  CHECK_THROWS_AS(parse_config_text("mapping.strategy = sometimes\n"), InputError);
  CHECK_THROWS_AS(parse_config_text("scene.voxel_size = abc\n"), InputError);
  try {
    parse_config_text("\n\ntracking.iters = -1\n");
    FAIL("expected a throw");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
}

TEST_CASE("describe_config round-trips through the parser") {
  SystemConfig c = parse_config_text("mapping.strategy = keyframe\nrun.seed = 17\nsampling.coarse = 20\n");
  const SystemConfig back = parse_config_text(describe_config(c));
  CHECK(describe_config(back) == describe_config(c));
  CHECK(back.seed == 17);
  CHECK(back.sampling.n_coarse == 20);
}

TEST_CASE("a missing config file is an input error") {
  CHECK_THROWS_AS(parse_config("/nonexistent/priorslam.cfg"), InputError);
}
