#include "priorslam/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace priorslam {

double shape_sdf(const Shape& shape, const Vec3& p) {
  return std::visit(
      [&](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, PlaneShape>) {
          return s.normal.dot(p) - s.offset;
        } else if constexpr (std::is_same_v<S, SphereShape>) {
          return (p - s.center).norm() - s.radius;
        } else {
          const Vec3 q = (p - s.center).cwiseAbs() - s.half_extent;
          const double d = q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
          return s.hollow ? -d : d;
        }
      },
      shape);
}

AnalyticScene& AnalyticScene::add(const Shape& shape) {
  shapes_.push_back(shape);
  return *this;
}

AnalyticScene& AnalyticScene::set_albedo(Albedo albedo) {
  albedo_ = std::move(albedo);
  return *this;
}

double AnalyticScene::sdf(const Vec3& p) const {
  if (shapes_.empty()) throw InputError("AnalyticScene has no shapes");
  double d = std::numeric_limits<double>::infinity();
  for (const auto& s : shapes_) d = std::min(d, shape_sdf(s, p));
  return d;
}

Vec3 AnalyticScene::albedo(const Vec3& p) const {
  if (!albedo_) return Vec3::Constant(0.5);
  return albedo_(p).cwiseMax(0.0).cwiseMin(1.0);
}

std::optional<double> AnalyticScene::trace(const Vec3& origin, const Vec3& direction, double max_range,
                                           double tolerance) const {
  double t = 0.0;
  for (int i = 0; i < 4096 && t <= max_range; ++i) {
    const double d = sdf(origin + t * direction);
    if (std::abs(d) < tolerance) return t;
    t += d;
    if (t < 0.0) return std::nullopt;  // started inside geometry
  }
  return std::nullopt;
}

AnalyticScene make_scene(const std::string& name) {
  AnalyticScene scene;
  if (name == "room") {
    scene.add(BoxShape{Vec3::Zero(), Vec3::Ones(), true});
    scene.add(SphereShape{Vec3(0.0, 0.75, 0.0), 0.25});
    scene.set_albedo([](const Vec3& p) {
      const double k = 2.0 * std::numbers::pi;
      return Vec3(0.5 + 0.3 * std::sin(k * 0.9 * p.x() + 0.5) * std::cos(k * 0.6 * p.y()),
                  0.5 + 0.3 * std::sin(k * 0.7 * p.y() + 1.3) * std::cos(k * 0.8 * p.z()),
                  0.5 + 0.3 * std::sin(k * 0.8 * p.z() + 2.1) * std::cos(k * 0.7 * p.x()));
    });
  } else if (name == "plane") {
    scene.add(PlaneShape{Vec3(0.0, 0.0, -1.0), -2.0});
    scene.set_albedo([](const Vec3& p) {
      return Vec3(0.5 + 0.3 * std::sin(4.0 * p.x()), 0.5 + 0.3 * std::sin(4.0 * p.y()), 0.5);
    });
  } else {
    throw InputError("unknown synthetic scene: " + name);
  }
  return scene;
}

PoseParams look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 z = (target - eye).normalized();
  const Vec3 x = z.cross(-up).normalized();  // image u direction
  if (!x.allFinite()) throw InputError("look_at: view direction parallel to up");
  const Vec3 y = z.cross(x);
  Mat3 R;
  R.col(0) = x;
  R.col(1) = y;
  R.col(2) = z;
  return to_pose(R, eye);
}

std::vector<PoseParams> room_trajectory(int frames, double arc_degrees, double radius) {
  if (frames <= 0) throw InputError("room_trajectory: frames must be positive");
  const double arc = arc_degrees * std::numbers::pi / 180.0;
  const Vec3 target(0.0, 0.55, 0.0);
  std::vector<PoseParams> out;
  out.reserve(static_cast<std::size_t>(frames));
  for (int k = 0; k < frames; ++k) {
    const double s = frames > 1 ? static_cast<double>(k) / (frames - 1) : 0.0;
    const double theta = -0.5 * arc + arc * 0.5 * (1.0 - std::cos(std::numbers::pi * s));
    const Vec3 eye(radius * std::sin(theta), -0.1, -radius * std::cos(theta));
    out.push_back(canonicalize(look_at(eye, target)));
  }
  return out;
}

Intrinsics synthetic_intrinsics() {
  Intrinsics K;
  K.fx = 120.0;
  K.fy = 120.0;
  K.cx = 80.0;
  K.cy = 60.0;
  K.width = 160;
  K.height = 120;
  K.depth_scale = 5000.0;
  return K;
}

Frame render_frame(const AnalyticScene& scene, const Intrinsics& K, const PoseParams& T) {
  K.validate();
  Frame f;
  f.width = K.width;
  f.height = K.height;
  f.color.assign(static_cast<std::size_t>(K.width) * K.height * 3, 0.0f);
  f.depth.assign(static_cast<std::size_t>(K.width) * K.height, 0.0f);
  const Mat3 R = T.rotation();
  for (int v = 0; v < K.height; ++v) {
    for (int u = 0; u < K.width; ++u) {
      const Vec3 ray = K.pixel_ray(u, v);
      const double norm = ray.norm();
      const auto hit = scene.trace(T.t, R * ray / norm);
      if (!hit) continue;
      const std::size_t i = static_cast<std::size_t>(v) * K.width + u;
      f.depth[i] = static_cast<float>(*hit / norm);
      const Vec3 c = scene.albedo(T.t + R * ray * (*hit / norm));
      for (int k = 0; k < 3; ++k) f.color[i * 3 + k] = static_cast<float>(c[k]);
    }
  }
  return f;
}

void generate_sequence(const AnalyticScene& scene, const std::vector<PoseParams>& trajectory, const Intrinsics& K,
                       const std::filesystem::path& out_dir, const SynthOptions& options) {
  if (trajectory.empty()) throw InputError("generate_sequence: empty trajectory");
  K.validate();
  if (options.noise_sigma < 0.0) throw InputError("generate_sequence: noise_sigma must be >= 0");
  std::filesystem::create_directories(out_dir / "color");
  std::filesystem::create_directories(out_dir / "depth");
  write_intrinsics(out_dir / "intrinsics.txt", K);
  Rng rng(options.seed);
  std::normal_distribution<double> noise(0.0, options.noise_sigma > 0.0 ? options.noise_sigma : 1.0);
  std::vector<StampedPose> gt;
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    const Frame f = render_frame(scene, K, trajectory[k]);
    Image8 rgb{K.width, K.height, std::vector<std::uint8_t>(f.color.size())};
    for (std::size_t i = 0; i < f.color.size(); ++i) {
      rgb.rgb[i] = static_cast<std::uint8_t>(std::lround(std::clamp(f.color[i], 0.0f, 1.0f) * 255.0f));
    }
    Image16 depth{K.width, K.height, std::vector<std::uint16_t>(f.depth.size(), 0)};
    for (std::size_t i = 0; i < f.depth.size(); ++i) {
      if (f.depth[i] <= 0.0f) continue;
      double d = f.depth[i];
      if (options.noise_sigma > 0.0) d = std::max(0.0, d + noise(rng));
      depth.values[i] = static_cast<std::uint16_t>(std::min(65535.0, std::round(d * K.depth_scale)));
    }
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.png", k);
    write_png_rgb(out_dir / "color" / name, rgb);
    write_png_depth(out_dir / "depth" / name, depth);
    gt.push_back({static_cast<double>(k) / options.frame_rate, trajectory[k]});
  }
  write_tum_trajectory(out_dir / "groundtruth.txt", gt);
}

}  // namespace priorslam
