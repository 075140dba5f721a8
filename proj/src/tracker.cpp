#include "priorslam/tracker.hpp"

namespace priorslam {

TrackResult optimize_pose(const Frame& frame, const Intrinsics& K, const PoseParams& init, const Scene& scene,
                          const SamplingConfig& sampling, const ObjectiveWeights& weights, const TrackingConfig& cfg,
                          Rng& rng) {
  if (frame.valid_depth_count() == 0) throw InputError("track_frame: frame has no valid depth");
  TrackResult result;
  result.pose = init;
  if (cfg.iterations <= 0) return result;

  ParamGroup rot{"rotation", {init.q.begin(), init.q.end()}, cfg.lr_rotation, true};
  ParamGroup trans{"translation", {init.t.begin(), init.t.end()}, cfg.lr_translation, true};
  ParamGroup* groups[2] = {&rot, &trans};
  AdamState adam;
  GradientBuffer grads{SparseGrad(4, 4), SparseGrad(3, 3)};
  std::vector<PoseGrad> pose_grad;

  for (int it = 0; it < cfg.iterations; ++it) {
    const PoseParams current{Vec4(rot.values[0], rot.values[1], rot.values[2], rot.values[3]),
                             Vec3(trans.values[0], trans.values[1], trans.values[2])};
    std::vector<RayQuery> queries;
    for (const auto& px : sample_pixels(frame, cfg.pixels, rng)) queries.push_back({px, 0});
    const BatchResult br = evaluate_batch(scene, queries, std::span(&current, 1), K, sampling, weights, rng, nullptr,
                                          &pose_grad);
    result.losses.push_back(br.terms.total);
    if (!result.loss || br.terms.total < *result.loss) {
      result.loss = br.terms.total;
      result.pose = current;
      result.best_iteration = it;
    }
    for (auto& g : grads) g.clear();
    double* dq = grads[0].row(0);
    double* dt = grads[1].row(0);
    for (int k = 0; k < 4; ++k) dq[k] = pose_grad[0].dq[k];
    for (int k = 0; k < 3; ++k) dt[k] = pose_grad[0].dt[k];
    adam_step(groups, grads, adam);
    const PoseParams stepped = normalize({Vec4(rot.values[0], rot.values[1], rot.values[2], rot.values[3]), Vec3::Zero()});
    for (int k = 0; k < 4; ++k) rot.values[k] = stepped.q[k];
  }
  return result;
}

TrackResult track_frame(const Frame& frame, const Intrinsics& K, const std::vector<PoseParams>& history,
                        const Scene& scene, const SamplingConfig& sampling, const ObjectiveWeights& weights,
                        const TrackingConfig& cfg, Rng& rng) {
  return optimize_pose(frame, K, predict_next_pose(history), scene, sampling, weights, cfg, rng);
}

}  // namespace priorslam
