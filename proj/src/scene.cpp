#include "priorslam/scene.hpp"

#include <string>

namespace priorslam {

Scene::Scene(const Aabb& bounds, double voxel_size, double plane_cell) : volume(voxel_size), planes(bounds, plane_cell) {
  normalize_scale_ = (2.0 / planes.bounds().extent().array()).matrix();
}

Vec3 Scene::normalize_point(const Vec3& p) const {
  return ((p - planes.bounds().min).array() * normalize_scale_.array() - 1.0).matrix();
}

std::optional<double> Scene::sdf(const Vec3& p) const {
  TrilerpStencil st;
  if (!volume.stencil(p, st)) return std::nullopt;
  return geometry.decode(normalize_point(p), volume.interpolate(st));
}

Vec3 Scene::color(const Vec3& p) const { return color_decoder.decode(planes.project_features(p)); }

std::vector<ParamGroup*> Scene::param_groups() {
  return {&volume.embeddings(), &planes.features(), &geometry.net.params, &color_decoder.net.params};
}

void SceneGrad::prepare(const Scene& scene) {
  const std::size_t sizes[4] = {scene.volume.embeddings().values.size(), scene.planes.features().values.size(),
                                GeometryDecoder::Net::kParamCount, ColorDecoder::Net::kParamCount};
  const std::size_t widths[4] = {kEmbeddingDim, kPlaneChannels, sizes[2], sizes[3]};
  if (buffers.size() != 4) {
    buffers.clear();
    for (int g = 0; g < 4; ++g) buffers.emplace_back(sizes[g], widths[g]);
    return;
  }
  clear();
  for (int g = 0; g < 4; ++g) buffers[g].resize(sizes[g]);
}

void SceneGrad::clear() {
  for (auto& b : buffers) b.clear();
}

void SceneGrad::scale(double s) {
  for (auto& b : buffers) b.scale(s);
}

namespace {

struct SampleCache {
  TrilerpStencil voxel;
  PlaneStencil plane;
  GeometryDecoder::Cache geometry;
  ColorDecoder::Cache color;
};

}  // namespace

BatchResult evaluate_batch(const Scene& scene, std::span<const RayQuery> queries, std::span<const PoseParams> poses,
                           const Intrinsics& K, const SamplingConfig& sampling, const ObjectiveWeights& weights,
                           Rng& rng, SceneGrad* scene_grad, std::vector<PoseGrad>* pose_grad) {
  const bool backward = scene_grad != nullptr || pose_grad != nullptr;
  const double tr = sampling.tr;
  std::vector<Mat3> rotations(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) rotations[i] = poses[i].rotation();
  std::vector<Mat3> dR(poses.size(), Mat3::Zero());
  std::vector<Vec3> dT(poses.size(), Vec3::Zero());
  if (scene_grad) scene_grad->prepare(scene);

  SparseGrad* g_emb = scene_grad ? &scene_grad->embeddings() : nullptr;
  SparseGrad* g_planes = scene_grad ? &scene_grad->planes() : nullptr;
  SparseGrad* g_geo = scene_grad ? &scene_grad->geometry() : nullptr;
  SparseGrad* g_col = scene_grad ? &scene_grad->color() : nullptr;

  const std::size_t n = static_cast<std::size_t>(sampling.total());
  RaySampleBatch batch;
  batch.resize(n);
  std::vector<SampleCache> cache(n);
  std::vector<double> d_sdf_loss(n), d_sdf_render(n);
  std::vector<Vec3> d_color(n);
  const Vec3 norm_scale = scene.normalize_scale();

  BatchResult result;
  for (const RayQuery& q : queries) {
    const PoseParams& pose = poses[q.pose_slot];
    const Vec3 cam_dir = K.pixel_ray(q.pixel.u, q.pixel.v);
    const double ray_len = cam_dir.norm();
    const Vec3 cam_unit = cam_dir / ray_len;
    const Vec3 dir = rotations[q.pose_slot] * cam_unit;
    const Vec3& origin = pose.t;
    const double D = q.pixel.depth * ray_len;
    const std::vector<double> z = sample_ray(D, sampling, rng);
    ++result.rays;

    for (std::size_t i = 0; i < n; ++i) {
      batch.z[i] = z[i];
      const Vec3 p = origin + z[i] * dir;
      SampleCache& c = cache[i];
      if (scene.volume.stencil(p, c.voxel)) {
        batch.inside[i] = 1;
        batch.sdf[i] = scene.geometry.decode(scene.normalize_point(p), scene.volume.interpolate(c.voxel), &c.geometry);
        scene.planes.stencil(p, c.plane);
        batch.color[i] = scene.color_decoder.decode(scene.planes.interpolate(c.plane), &c.color);
      } else {
        batch.inside[i] = 0;
        batch.sdf[i] = tr;
        batch.color[i] = Vec3::Zero();
      }
    }
    const Rendered rendered = render(batch, tr);
    if (rendered.excluded) {
      ++result.excluded;
      continue;
    }
    const RayLoss loss = ray_loss(batch, rendered, q.pixel.color, D, tr, weights, d_sdf_loss);
    result.terms.rgb += loss.terms.rgb;
    result.terms.depth += loss.terms.depth;
    result.terms.fs += loss.terms.fs;
    result.terms.sdf += loss.terms.sdf;
    if (!backward) continue;

    render_backward(batch, rendered, tr, loss.d_color, loss.d_depth, d_sdf_render, d_color, {});
    Vec3 d_origin = Vec3::Zero();
    Vec3 d_dir = Vec3::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      if (!batch.inside[i]) continue;
      const SampleCache& c = cache[i];
      const double ds = d_sdf_loss[i] + d_sdf_render[i];
      Vec3 d_pn;
      Embedding d_e;
      scene.geometry.backward(c.geometry, ds, &d_pn, &d_e, g_geo);
      Vec3 dp = d_pn.cwiseProduct(norm_scale);
      dp += scene.volume.trilerp_backward(c.voxel, d_e, g_emb);
      PlaneFeature d_f;
      scene.color_decoder.backward(c.color, d_color[i], &d_f, g_col);
      dp += scene.planes.backward(c.plane, d_f, g_planes);
      d_origin += dp;
      d_dir += batch.z[i] * dp;
    }
    if (pose_grad) {
      dT[q.pose_slot] += d_origin;
      dR[q.pose_slot] += d_dir * cam_unit.transpose();
    }
  }

  const std::size_t used = result.rays - result.excluded;
  if (used == 0) throw InputError("evaluate_batch: every ray was excluded");
  const double inv = 1.0 / static_cast<double>(used);
  result.terms.rgb *= inv;
  result.terms.depth *= inv;
  result.terms.fs *= inv;
  result.terms.sdf *= inv;
  result.terms.finalize(weights);
  require_finite(result.terms.total, "objective");

  if (scene_grad) {
    scene_grad->scale(inv);
    const char* names[4] = {"trilerp", "project_features", "decode_sdf", "decode_color"};
    for (int g = 0; g < 4; ++g) scene_grad->buffers[g].check_finite(names[g]);
  }
  if (pose_grad) {
    pose_grad->assign(poses.size(), PoseGrad{});
    for (std::size_t s = 0; s < poses.size(); ++s) {
      (*pose_grad)[s].dt = dT[s] * inv;
      (*pose_grad)[s].dq = quat_to_rotation_backward(poses[s].q, dR[s] * inv);
      require_finite((*pose_grad)[s].dq.sum() + (*pose_grad)[s].dt.sum(), "quat_to_rotation");
    }
  }
  return result;
}

}  // namespace priorslam
