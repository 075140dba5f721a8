#include "priorslam/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "priorslam/checkpoint.hpp"
#include "priorslam/log.hpp"
#include "priorslam/mapper.hpp"
#include "priorslam/synth.hpp"
#include "priorslam/tracker.hpp"

namespace priorslam {

namespace {

std::string num(double v, int digits = 6) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << std::fixed << v;
  return ss.str();
}

class RunLog {
 public:
  explicit RunLog(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw InputError("cannot write log: " + path.string());
  }
  void info(const std::string& msg) {
    out_ << msg << '\n';
    out_.flush();
    log_info(msg);
  }

 private:
  std::ofstream out_;
};

Aabb initial_bounds(const SystemConfig& cfg, const Frame& first, const Intrinsics& K) {
  if (cfg.scene.bounds) return *cfg.scene.bounds;
  const auto pts = backproject(first, K, PoseParams::identity());
  if (pts.empty()) throw InputError("first frame has no valid depth; cannot derive scene bounds");
  Aabb box{pts.front(), pts.front()};
  for (const auto& p : pts) {
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  box.min = box.min.cwiseMin(Vec3::Zero());
  box.max = box.max.cwiseMax(Vec3::Zero());
  return box.inflated(cfg.scene.bounds_margin);
}

Scene initial_scene(const SystemConfig& cfg, const Aabb& bounds, Rng& rng) {
  Scene scene(bounds, cfg.scene.voxel_size, cfg.scene.plane_cell);
  scene.planes.randomize(rng, cfg.scene.plane_init_std);
  scene.geometry.init_passthrough(cfg.sampling.tr, rng);
  scene.color_decoder.init_random(rng);
  return scene;
}

Trajectory to_trajectory(const std::vector<PoseParams>& poses) {
  Trajectory t;
  for (std::size_t i = 0; i < poses.size(); ++i) t.emplace(static_cast<int>(i), poses[i]);
  return t;
}

}  // namespace

TriangleMesh reference_mesh(const std::string& scene_name, const Dataset& dataset, const SystemConfig& cfg) {
  const AnalyticScene analytic = make_scene(scene_name);
  SparseVolume volume(cfg.scene.voxel_size);
  const std::size_t n = cfg.dataset.max_frames > 0 ? std::min<std::size_t>(cfg.dataset.max_frames, dataset.size())
                                                   : dataset.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& gt = dataset.groundtruth()[i];
    if (!gt) continue;
    const Frame f = dataset.load_frame(i);
    for (const auto& v : encode_prior(f, dataset.intrinsics(), *gt, cfg.sampling.tr, cfg.scene.voxel_size,
                                      PriorMode::kNone)
                             .voxels) {
      volume.allocate(v);
    }
  }
  const double res = cfg.eval.mesh_resolution > 0.0 ? cfg.eval.mesh_resolution : cfg.scene.voxel_size / 2.0;
  const int sub = std::max(1, static_cast<int>(std::lround(cfg.scene.voxel_size / res)));
  return marching_cubes(volume, [&](const VoxelKey&, const Vec3& p) { return analytic.sdf(p); }, sub);
}

RunResult run(const SystemConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  namespace fs = std::filesystem;
  const Dataset dataset = load_dataset(cfg.dataset.path, cfg.dataset.format, cfg.dataset.depth_scale);
  if (dataset.size() == 0) throw DatasetError("dataset has no frames: " + cfg.dataset.path.string());
  fs::create_directories(cfg.output);
  RunLog log(cfg.output / "run.log");
  log.info("resolved configuration:\n" + describe_config(cfg));

  const Intrinsics& K = dataset.intrinsics();
  const std::size_t n_frames = cfg.dataset.max_frames > 0
                                   ? std::min<std::size_t>(static_cast<std::size_t>(cfg.dataset.max_frames), dataset.size())
                                   : dataset.size();
  std::optional<PriorEncoder> encoder;
  if (cfg.scene.prior == PriorMode::kLearned) encoder = PriorEncoder::load(cfg.scene.encoder);

  Rng rng(cfg.seed);
  Frame frame = dataset.load_frame(0);
  Scene scene = initial_scene(cfg, initial_bounds(cfg, frame, K), rng);
  {
    const Aabb& b = scene.bounds();
    log.info("scene bounds: [" + num(b.min.x(), 3) + ", " + num(b.min.y(), 3) + ", " + num(b.min.z(), 3) + "] - [" +
             num(b.max.x(), 3) + ", " + num(b.max.y(), 3) + ", " + num(b.max.z(), 3) + "]");
  }
  const double mesh_res = cfg.eval.mesh_resolution > 0.0 ? cfg.eval.mesh_resolution : cfg.scene.voxel_size / 2.0;

  PixelDatabase db(cfg.mapping.pixels_per_frame);
  std::vector<PoseParams> poses;
  std::vector<FrameMeta> metas;
  AdamState scene_adam;
  AdamState pose_adam;
  const auto ckpt_path = cfg.output / "scene.ckpt";

  for (std::size_t k = 0; k < n_frames; ++k) {
    if (k > 0) frame = dataset.load_frame(k);
    frame.index = static_cast<int>(k);
    if (k == 0) {
      poses.push_back(PoseParams::identity());
    } else {
      const TrackResult tr = track_frame(frame, K, poses, scene, cfg.sampling, cfg.weights, cfg.tracking, rng);
      poses.push_back(tr.pose);
      log.info("frame " + std::to_string(k) + " tracked, loss " + (tr.loss ? num(*tr.loss) : std::string("n/a")));
    }
    fuse(scene.volume, encode_prior(frame, K, poses.back(), cfg.sampling.tr, cfg.scene.voxel_size, cfg.scene.prior,
                                    encoder ? &*encoder : nullptr));
    db.add_frame(frame, rng);
    metas.push_back(make_frame_meta(frame, K, poses.back(), rng));

    if (cfg.mapping.interval > 0 && k % static_cast<std::size_t>(cfg.mapping.interval) == 0 &&
        cfg.mapping.iterations > 0) {
      const int current = static_cast<int>(k);
      const std::vector<int> selected =
          cfg.mapping.strategy == MappingStrategy::kAllFrames
              ? select_frames(current, metas, K, cfg.mapping.selection, rng)
              : select_keyframes(current, metas, K, cfg.mapping.keyframe_stride, cfg.mapping.keyframe_recent,
                                 cfg.mapping.keyframe_covisible, cfg.mapping.selection.min_covisibility, rng);
      const Scene last_good = scene;
      try {
        const MapStepResult res = map_step(selected, db, scene, poses, K, cfg.mapping, cfg.sampling, cfg.weights,
                                           scene_adam, pose_adam, rng);
        const double final_loss = res.iterations.empty() ? 0.0 : res.iterations.back().total;
        log.info("frame " + std::to_string(k) + " mapped over " + std::to_string(res.frames_used) + " frames, loss " +
                 num(final_loss));
      } catch (const NumericError& e) {
        save_checkpoint(ckpt_path, last_good, cfg.sampling.tr, mesh_res, poses);
        log.info(std::string("aborting on non-finite value: ") + e.what());
        throw;
      }
      for (auto& m : metas) m.pose = poses[static_cast<std::size_t>(m.frame_id)];
    }
  }

  RunResult result;
  result.poses = poses;
  std::vector<StampedPose> stamped;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    stamped.push_back({dataset.entry(i).timestamp.value_or(static_cast<double>(i)), canonicalize(poses[i])});
  }
  write_tum_trajectory(cfg.output / "trajectory.txt", stamped);

  result.mesh = extract_mesh(scene, mesh_res);
  save_ply(result.mesh, cfg.output / "mesh.ply");
  save_checkpoint(ckpt_path, scene, cfg.sampling.tr, mesh_res, poses);

  result.metrics.emplace_back("frames", std::to_string(poses.size()));
  result.metrics.emplace_back("voxels", std::to_string(scene.volume.voxel_count()));
  result.metrics.emplace_back("mesh_vertices", std::to_string(result.mesh.vertices.size()));
  result.metrics.emplace_back("mesh_triangles", std::to_string(result.mesh.triangles.size()));

  Trajectory gt;
  for (std::size_t i = 0; i < n_frames; ++i) {
    if (dataset.groundtruth()[i]) gt.emplace(static_cast<int>(i), *dataset.groundtruth()[i]);
  }
  if (gt.size() >= 3) {
    result.ate_cm = ate_rmse(to_trajectory(poses), gt);
    result.metrics.emplace_back("ate_rmse_cm", num(*result.ate_cm));
  }
  if (dataset.groundtruth()[0] && (!cfg.eval.gt_scene.empty() || !cfg.eval.gt_mesh.empty())) {
    TriangleMesh ref = cfg.eval.gt_mesh.empty() ? reference_mesh(cfg.eval.gt_scene, dataset, cfg)
                                                : load_ply(cfg.eval.gt_mesh);
    const PoseParams to_first = dataset.groundtruth()[0]->inverse();
    for (auto& v : ref.vertices) v = to_first.transform(v);
    if (!result.mesh.empty() && !ref.empty()) {
      Rng eval_rng(cfg.seed);
      result.recon = mesh_metrics(result.mesh, ref, cfg.eval.samples, cfg.eval.threshold, eval_rng);
      result.metrics.emplace_back("accuracy_pct", num(result.recon->accuracy_pct, 3));
      result.metrics.emplace_back("completeness_pct", num(result.recon->completeness_pct, 3));
      result.metrics.emplace_back("f1_pct", num(result.recon->f1_pct, 3));
    } else {
      result.recon = ReconMetrics{};
      result.metrics.emplace_back("f1_pct", num(0.0, 3));
    }
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.metrics.emplace_back("seconds", num(result.seconds, 1));
  write_report(cfg.output / "metrics.txt", result.metrics);
  log.info("metrics:\n" + format_report(result.metrics));
  return result;
}

}  // namespace priorslam
