#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "priorslam/frame_io.hpp"
#include "priorslam/pose.hpp"

namespace priorslam {

struct PlaneShape {
  Vec3 normal = Vec3::UnitZ();  ///< unit
  double offset = 0.0;          ///< sdf = dot(normal, p) - offset
};
struct SphereShape {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};
struct BoxShape {
  Vec3 center = Vec3::Zero();
  Vec3 half_extent = Vec3::Ones();
  bool hollow = false;  ///< inside of the box is free space (a room)
};
using Shape = std::variant<PlaneShape, SphereShape, BoxShape>;

double shape_sdf(const Shape& shape, const Vec3& p);

/// Union of primitives with a bounded albedo field.
class AnalyticScene {
 public:
  using Albedo = std::function<Vec3(const Vec3&)>;

  AnalyticScene& add(const Shape& shape);
  AnalyticScene& set_albedo(Albedo albedo);

  [[nodiscard]] double sdf(const Vec3& p) const;
  [[nodiscard]] Vec3 albedo(const Vec3& p) const;
  [[nodiscard]] const std::vector<Shape>& shapes() const { return shapes_; }

  /// Distance along the unit direction to the first hit, or nullopt beyond max_range.
  [[nodiscard]] std::optional<double> trace(const Vec3& origin, const Vec3& direction, double max_range = 10.0,
                                            double tolerance = 1e-6) const;

 private:
  std::vector<Shape> shapes_;
  Albedo albedo_;
};

/// Built-in scenes: "room" (2 m box room with a sphere on the floor, smooth
/// color patterns) and "plane" (the plane z = 2).
AnalyticScene make_scene(const std::string& name);

/// Camera-to-world pose at `eye` looking at `target`; image v points along -up.
PoseParams look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3(0.0, -1.0, 0.0));

/// Eased circular arc around the room center, always facing the sphere.
std::vector<PoseParams> room_trajectory(int frames, double arc_degrees = 40.0, double radius = 0.5);

/// 160x120 camera used by the synthetic harness.
Intrinsics synthetic_intrinsics();

/// Renders exact (unquantized) depth in meters and albedo color; misses get depth 0.
Frame render_frame(const AnalyticScene& scene, const Intrinsics& K, const PoseParams& T);

struct SynthOptions {
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  double frame_rate = 30.0;
};

/// Writes intrinsics.txt, color/%06d.png, depth/%06d.png and groundtruth.txt.
void generate_sequence(const AnalyticScene& scene, const std::vector<PoseParams>& trajectory, const Intrinsics& K,
                       const std::filesystem::path& out_dir, const SynthOptions& options = {});

}  // namespace priorslam
