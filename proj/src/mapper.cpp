#include "priorslam/mapper.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace priorslam {

std::size_t PixelDatabase::add_frame(const Frame& frame, Rng& rng) {
  if (has_frame(frame.index)) throw InputError("pixel database already holds frame " + std::to_string(frame.index));
  std::vector<PixelSample> px = frame.valid_depth_count() ? sample_pixels(frame, capacity_, rng) : std::vector<PixelSample>{};
  const std::size_t n = px.size();
  pixels_.emplace(frame.index, std::move(px));
  total_ += n;
  return n;
}

std::span<const PixelSample> PixelDatabase::pixels(int frame_id) const {
  auto it = pixels_.find(frame_id);
  if (it == pixels_.end()) return {};
  return it->second;
}

FrameMeta make_frame_meta(const Frame& frame, const Intrinsics& K, const PoseParams& pose, Rng& rng,
                          std::size_t count) {
  FrameMeta meta;
  meta.frame_id = frame.index;
  meta.pose = pose;
  if (frame.valid_depth_count() == 0) return meta;
  for (const auto& px : sample_pixels(frame, count, rng)) meta.camera_points.push_back(K.pixel_ray(px.u, px.v) * px.depth);
  return meta;
}

double covisibility(const FrameMeta& a, const FrameMeta& b, const Intrinsics& K) {
  if (a.camera_points.empty()) return 0.0;
  const Mat3 Ra = a.pose.rotation();
  std::size_t seen = 0;
  for (const Vec3& pc : a.camera_points) {
    const auto proj = project(Ra * pc + a.pose.t, K, b.pose);
    if (proj && proj->u >= 0.0 && proj->u <= K.width - 1 && proj->v >= 0.0 && proj->v <= K.height - 1) ++seen;
  }
  return static_cast<double>(seen) / static_cast<double>(a.camera_points.size());
}

namespace {

const FrameMeta* find_meta(std::span<const FrameMeta> metas, int id) {
  for (const auto& m : metas) {
    if (m.frame_id == id) return &m;
  }
  return nullptr;
}

// Draws min(k, pool.size()) distinct entries uniformly and appends them to out.
void draw(std::vector<int> pool, int k, Rng& rng, std::vector<int>& out) {
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), pool.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
    out.push_back(pool[i]);
  }
}

}  // namespace

std::vector<int> select_frames(int current, std::span<const FrameMeta> metas, const Intrinsics& K,
                               const SelectionConfig& cfg, Rng& rng) {
  std::vector<int> history;
  for (const auto& m : metas) {
    if (m.frame_id <= current) history.push_back(m.frame_id);
  }
  std::sort(history.begin(), history.end());
  if (history.size() <= static_cast<std::size_t>(cfg.budget())) return history;

  std::vector<int> chosen(history.end() - cfg.recent, history.end());
  std::reverse(chosen.begin(), chosen.end());
  std::set<int> taken(chosen.begin(), chosen.end());

  const FrameMeta* cur = find_meta(metas, current);
  std::vector<int> covisible;
  for (int id : history) {
    if (taken.count(id) || cur == nullptr) continue;
    if (covisibility(*cur, *find_meta(metas, id), K) > cfg.min_covisibility) covisible.push_back(id);
  }
  const std::size_t before = chosen.size();
  draw(covisible, cfg.covisible, rng, chosen);
  taken.insert(chosen.begin() + static_cast<std::ptrdiff_t>(before), chosen.end());

  std::vector<int> rest;
  for (int id : history) {
    if (!taken.count(id)) rest.push_back(id);
  }
  draw(rest, cfg.random, rng, chosen);
  return chosen;
}

std::vector<int> select_keyframes(int current, std::span<const FrameMeta> metas, const Intrinsics& K, int stride,
                                  int recent, int covisible, double min_covisibility, Rng& rng) {
  std::vector<int> keyframes;
  for (const auto& m : metas) {
    if (m.frame_id <= current && m.frame_id % stride == 0) keyframes.push_back(m.frame_id);
  }
  std::sort(keyframes.begin(), keyframes.end());
  std::vector<int> chosen;
  const std::size_t n_recent = std::min<std::size_t>(static_cast<std::size_t>(recent), keyframes.size());
  chosen.assign(keyframes.end() - static_cast<std::ptrdiff_t>(n_recent), keyframes.end());
  std::reverse(chosen.begin(), chosen.end());
  const FrameMeta* cur = find_meta(metas, current);
  std::vector<int> pool;
  for (int id : keyframes) {
    if (std::find(chosen.begin(), chosen.end(), id) != chosen.end() || cur == nullptr) continue;
    if (covisibility(*cur, *find_meta(metas, id), K) > min_covisibility) pool.push_back(id);
  }
  draw(pool, covisible, rng, chosen);
  return chosen;
}

MapStepResult map_step(std::span<const int> selected, const PixelDatabase& db, Scene& scene,
                       std::vector<PoseParams>& poses, const Intrinsics& K, const MappingConfig& cfg,
                       const SamplingConfig& sampling, const ObjectiveWeights& weights, AdamState& scene_adam,
                       AdamState& pose_adam, Rng& rng) {
  MapStepResult result;
  std::vector<int> frames;
  for (int id : selected) {
    if (db.pixels(id).empty()) {
      ++result.frames_dropped;
      continue;
    }
    if (id < 0 || static_cast<std::size_t>(id) >= poses.size()) throw InputError("map_step: no pose for frame " + std::to_string(id));
    frames.push_back(id);
  }
  result.frames_used = frames.size();
  if (frames.empty() || cfg.iterations <= 0) return result;

  // Pixel quota per frame; the remainder goes to the most recent frames.
  std::vector<std::size_t> quota(frames.size(), cfg.pixels / frames.size());
  std::vector<std::size_t> by_recency(frames.size());
  std::iota(by_recency.begin(), by_recency.end(), 0);
  std::sort(by_recency.begin(), by_recency.end(), [&](std::size_t a, std::size_t b) { return frames[a] > frames[b]; });
  for (std::size_t r = 0; r < cfg.pixels % frames.size(); ++r) ++quota[by_recency[r]];
  result.frame_ids = frames;
  result.pixels_per_frame = quota;

  std::vector<ParamGroup*> groups = scene.param_groups();
  groups[0]->learning_rate = cfg.lr_embeddings;
  groups[1]->learning_rate = cfg.lr_planes;
  groups[2]->learning_rate = cfg.lr_decoders;
  groups[3]->learning_rate = cfg.lr_decoders;

  constexpr std::size_t kPoseWidth = 7;
  // One row per frame id so the pose moments persist across map steps.
  ParamGroup pose_group{"poses", std::vector<double>(poses.size() * kPoseWidth), cfg.lr_poses, true};
  groups.push_back(&pose_group);
  SceneGrad scene_grad;
  std::vector<PoseGrad> pose_grad;
  std::vector<PoseParams> slot_pose(frames.size());

  for (int it = 0; it < cfg.iterations; ++it) {
    std::vector<RayQuery> queries;
    queries.reserve(cfg.pixels);
    for (std::size_t s = 0; s < frames.size(); ++s) {
      slot_pose[s] = poses[frames[s]];
      const auto px = db.pixels(frames[s]);
      std::uniform_int_distribution<std::size_t> pick(0, px.size() - 1);
      for (std::size_t k = 0; k < quota[s]; ++k) queries.push_back({px[pick(rng)], s});
    }
    const BatchResult br = evaluate_batch(scene, queries, slot_pose, K, sampling, weights, rng, &scene_grad, &pose_grad);
    result.iterations.push_back(br.terms);

    SparseGrad pg(pose_group.values.size(), kPoseWidth);
    for (std::size_t s = 0; s < frames.size(); ++s) {
      if (frames[s] == 0) continue;  // gauge anchor
      const std::size_t r = static_cast<std::size_t>(frames[s]);
      double* row = pg.row(r);
      for (int k = 0; k < 4; ++k) row[k] += pose_grad[s].dq[k];
      for (int k = 0; k < 3; ++k) row[4 + k] += pose_grad[s].dt[k];
      for (int k = 0; k < 4; ++k) pose_group.values[r * kPoseWidth + k] = slot_pose[s].q[k];
      for (int k = 0; k < 3; ++k) pose_group.values[r * kPoseWidth + 4 + k] = slot_pose[s].t[k];
    }
    adam_step(std::span(groups.data(), 4), scene_grad.buffers, scene_adam);
    adam_step(std::span(groups.data() + 4, 1), std::span(&pg, 1), pose_adam);
    for (std::size_t s = 0; s < frames.size(); ++s) {
      if (frames[s] == 0) continue;
      const double* v = pose_group.values.data() + static_cast<std::size_t>(frames[s]) * kPoseWidth;
      poses[frames[s]] = normalize({Vec4(v[0], v[1], v[2], v[3]), Vec3(v[4], v[5], v[6])});
    }
  }
  return result;
}

}  // namespace priorslam
