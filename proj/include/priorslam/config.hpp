#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "priorslam/frame_io.hpp"
#include "priorslam/mapper.hpp"
#include "priorslam/objective.hpp"
#include "priorslam/renderer.hpp"
#include "priorslam/sparse_volume.hpp"
#include "priorslam/tracker.hpp"

namespace priorslam {

struct SystemConfig {
  struct DatasetSection {
    std::filesystem::path path;
    DatasetFormat format = DatasetFormat::kDirectory;
    std::optional<double> depth_scale;
    /// 0 = every frame.
    int max_frames = 0;
  } dataset;

  struct SceneSection {
    double voxel_size = 0.04;
    double plane_cell = 0.04;
    PriorMode prior = PriorMode::kAnalytic;
    std::filesystem::path encoder;
    std::optional<Aabb> bounds;
    double bounds_margin = 0.5;
    double plane_init_std = 1e-2;
  } scene;

  SamplingConfig sampling;
  TrackingConfig tracking;
  MappingConfig mapping;
  ObjectiveWeights weights;

  struct EvalSection {
    /// 0 = voxel_size / 2.
    double mesh_resolution = 0.0;
    std::size_t samples = 100000;
    double threshold = 0.05;
    /// Reference mesh file, or the name of a built-in analytic scene.
    std::filesystem::path gt_mesh;
    std::string gt_scene;
  } eval;

  std::uint64_t seed = 0;
  std::filesystem::path output = "output";
  std::string log_level = "info";

  /// Throws InputError on any out-of-range field.
  void validate() const;
};

/// Flat `section.key = value` lines; `#` starts a comment; blank lines are
/// ignored. Unknown keys, malformed lines and out-of-range values throw
/// InputError naming the line. Missing keys keep their defaults.
SystemConfig parse_config_text(const std::string& text);
SystemConfig parse_config(const std::filesystem::path& path);

/// Every key with its resolved value, in the syntax parse_config reads;
/// unset optional keys appear as comments.
std::string describe_config(const SystemConfig& cfg);

}  // namespace priorslam
