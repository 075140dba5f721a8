#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "priorslam/pose.hpp"
#include "priorslam/types.hpp"

namespace priorslam {

struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  /// Raw 16-bit depth units per meter.
  double depth_scale = 5000.0;

  /// Throws InputError unless fx, fy > 0, 0 < cx < width, 0 < cy < height, depth_scale > 0.
  void validate() const;

  /// Unnormalized camera-frame ray ((u-cx)/fx, (v-cy)/fy, 1).
  [[nodiscard]] Vec3 pixel_ray(double u, double v) const { return {(u - cx) / fx, (v - cy) / fy, 1.0}; }
};

/// One RGB-D observation. Color is row-major H*W*3 in [0,1]; depth is H*W meters, 0 = invalid.
struct Frame {
  int index = 0;
  std::optional<double> timestamp;
  int width = 0;
  int height = 0;
  std::vector<float> color;
  std::vector<float> depth;

  [[nodiscard]] float depth_at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
  [[nodiscard]] Vec3 color_at(int u, int v) const {
    const std::size_t i = (static_cast<std::size_t>(v) * width + u) * 3;
    return {color[i], color[i + 1], color[i + 2]};
  }
  [[nodiscard]] std::size_t valid_depth_count() const;
  /// Throws InputError if sizes disagree or values are non-finite / negative depth.
  void validate() const;
};

struct PixelSample {
  int frame_id = 0;
  int u = 0;
  int v = 0;
  Vec3 color = Vec3::Zero();
  double depth = 0.0;
};

enum class DatasetFormat { kTum, kDirectory };

DatasetFormat parse_dataset_format(const std::string& name);

/// Frames are decoded lazily; the dataset itself only holds file names.
class Dataset {
 public:
  struct Entry {
    std::optional<double> timestamp;
    std::filesystem::path color_path;
    std::filesystem::path depth_path;
  };

  Dataset(Intrinsics intrinsics, std::vector<Entry> entries, std::vector<std::optional<PoseParams>> groundtruth);

  [[nodiscard]] const Intrinsics& intrinsics() const { return intrinsics_; }
  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] const Entry& entry(std::size_t i) const { return entries_.at(i); }
  /// Ground-truth pose per frame (nullopt where no ground truth was associated).
  [[nodiscard]] const std::vector<std::optional<PoseParams>>& groundtruth() const { return groundtruth_; }
  [[nodiscard]] bool has_groundtruth() const;
  [[nodiscard]] Frame load_frame(std::size_t i) const;

 private:
  Intrinsics intrinsics_;
  std::vector<Entry> entries_;
  std::vector<std::optional<PoseParams>> groundtruth_;
};

struct TimestampedFile {
  double timestamp = 0.0;
  std::string file;
};

/// Greedy one-to-one association of color/depth stamps with |dt| <= max_dt,
/// closest pairs first. Returns index pairs (color, depth) in color order.
std::vector<std::pair<std::size_t, std::size_t>> associate_timestamps(const std::vector<double>& color_stamps,
                                                                      const std::vector<double>& depth_stamps,
                                                                      double max_dt);

Intrinsics read_intrinsics(const std::filesystem::path& path);
void write_intrinsics(const std::filesystem::path& path, const Intrinsics& K);

/// Loads a dataset. `depth_scale_override` replaces the scale in intrinsics.txt when given.
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     std::optional<double> depth_scale_override = std::nullopt);

/// World-frame points of every valid-depth pixel of `frame` seen from camera-to-world pose `T`.
std::vector<Vec3> backproject(const Frame& frame, const Intrinsics& K, const PoseParams& T);

/// Camera-frame pixel coordinates and depth of world point `p`; nullopt if behind the camera.
struct Projection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};
std::optional<Projection> project(const Vec3& p, const Intrinsics& K, const PoseParams& T);

/// Uniform sample without replacement over valid-depth pixels; clamps to the valid count.
/// Throws InputError when the frame has no valid depth.
std::vector<PixelSample> sample_pixels(const Frame& frame, std::size_t count, Rng& rng);

// Image files.
struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};
struct Image16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> values;
};
Image8 read_png_rgb(const std::filesystem::path& path);
Image16 read_png_depth(const std::filesystem::path& path);
void write_png_rgb(const std::filesystem::path& path, const Image8& image);
void write_png_depth(const std::filesystem::path& path, const Image16& image);

}  // namespace priorslam
