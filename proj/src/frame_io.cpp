#include "priorslam/frame_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "priorslam/log.hpp"

namespace fs = std::filesystem;

namespace priorslam {

void Intrinsics::validate() const {
  if (!(fx > 0 && fy > 0)) throw InputError("intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw InputError("intrinsics: image size must be positive");
  if (!(cx > 0 && cx < width && cy > 0 && cy < height)) {
    throw InputError("intrinsics: principal point must lie inside the image");
  }
  if (!(depth_scale > 0)) throw InputError("intrinsics: depth_scale must be positive");
}

std::size_t Frame::valid_depth_count() const {
  return static_cast<std::size_t>(std::count_if(depth.begin(), depth.end(), [](float d) { return d > 0.0f; }));
}

void Frame::validate() const {
  const auto n = static_cast<std::size_t>(width) * height;
  if (depth.size() != n || color.size() != 3 * n) throw InputError("frame: color/depth size mismatch");
  for (float d : depth) {
    if (!std::isfinite(d) || d < 0.0f) throw InputError("frame: depth must be finite and >= 0");
  }
  for (float c : color) {
    if (!std::isfinite(c)) throw InputError("frame: non-finite color");
  }
}

DatasetFormat parse_dataset_format(const std::string& name) {
  if (name == "tum") return DatasetFormat::kTum;
  if (name == "directory") return DatasetFormat::kDirectory;
  throw InputError("unknown dataset format '" + name + "' (expected tum or directory)");
}

Dataset::Dataset(Intrinsics intrinsics, std::vector<Entry> entries, std::vector<std::optional<PoseParams>> groundtruth)
    : intrinsics_(intrinsics), entries_(std::move(entries)), groundtruth_(std::move(groundtruth)) {
  groundtruth_.resize(entries_.size());
}

bool Dataset::has_groundtruth() const {
  return std::any_of(groundtruth_.begin(), groundtruth_.end(), [](const auto& p) { return p.has_value(); });
}

Frame Dataset::load_frame(std::size_t i) const {
  const Entry& e = entries_.at(i);
  const Image8 rgb = read_png_rgb(e.color_path);
  const Image16 raw = read_png_depth(e.depth_path);
  if (rgb.width != raw.width || rgb.height != raw.height) {
    throw InputError("color/depth size mismatch for frame " + std::to_string(i));
  }
  if (rgb.width != intrinsics_.width || rgb.height != intrinsics_.height) {
    throw InputError("image size disagrees with intrinsics for frame " + std::to_string(i));
  }
  Frame f;
  f.index = static_cast<int>(i);
  f.timestamp = e.timestamp;
  f.width = rgb.width;
  f.height = rgb.height;
  f.color.resize(rgb.rgb.size());
  std::transform(rgb.rgb.begin(), rgb.rgb.end(), f.color.begin(), [](std::uint8_t c) { return c / 255.0f; });
  f.depth.resize(raw.values.size());
  const double scale = intrinsics_.depth_scale;
  std::transform(raw.values.begin(), raw.values.end(), f.depth.begin(),
                 [scale](std::uint16_t d) { return static_cast<float>(d / scale); });
  return f;
}

std::vector<std::pair<std::size_t, std::size_t>> associate_timestamps(const std::vector<double>& color_stamps,
                                                                      const std::vector<double>& depth_stamps,
                                                                      double max_dt) {
  struct Candidate {
    double dt;
    std::size_t c, d;
  };
  std::vector<Candidate> candidates;
  std::vector<std::size_t> depth_order(depth_stamps.size());
  std::iota(depth_order.begin(), depth_order.end(), 0);
  std::sort(depth_order.begin(), depth_order.end(),
            [&](std::size_t a, std::size_t b) { return depth_stamps[a] < depth_stamps[b]; });
  for (std::size_t c = 0; c < color_stamps.size(); ++c) {
    const double t = color_stamps[c];
    auto lo = std::lower_bound(depth_order.begin(), depth_order.end(), t - max_dt,
                               [&](std::size_t d, double v) { return depth_stamps[d] < v; });
    for (auto it = lo; it != depth_order.end() && depth_stamps[*it] <= t + max_dt; ++it) {
      candidates.push_back({std::abs(depth_stamps[*it] - t), c, *it});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.dt < b.dt; });
  std::vector<bool> color_used(color_stamps.size()), depth_used(depth_stamps.size());
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& cand : candidates) {
    if (color_used[cand.c] || depth_used[cand.d]) continue;
    color_used[cand.c] = depth_used[cand.d] = true;
    pairs.emplace_back(cand.c, cand.d);
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

Intrinsics read_intrinsics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("missing intrinsics file: " + path.string());
  Intrinsics K;
  if (!(in >> K.fx >> K.fy >> K.cx >> K.cy >> K.width >> K.height >> K.depth_scale)) {
    throw InputError("malformed intrinsics file (expected: fx fy cx cy width height depth_scale): " + path.string());
  }
  K.validate();
  return K;
}

void write_intrinsics(const fs::path& path, const Intrinsics& K) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write intrinsics: " + path.string());
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.10g %.10g %.10g %.10g %d %d %.10g\n", K.fx, K.fy, K.cx, K.cy, K.width, K.height,
                K.depth_scale);
  out << buf;
}

namespace {

std::vector<TimestampedFile> read_file_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("missing file list: " + path.string());
  std::vector<TimestampedFile> out;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    TimestampedFile tf;
    if (!(ss >> tf.timestamp >> tf.file)) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected 'timestamp filename'");
    }
    out.push_back(std::move(tf));
  }
  return out;
}

Dataset load_tum(const fs::path& root, Intrinsics K) {
  const auto rgb = read_file_list(root / "rgb.txt");
  const auto depth = read_file_list(root / "depth.txt");
  std::vector<double> rgb_t, depth_t;
  for (const auto& r : rgb) rgb_t.push_back(r.timestamp);
  for (const auto& d : depth) depth_t.push_back(d.timestamp);
  constexpr double kMaxDt = 0.02;
  const auto pairs = associate_timestamps(rgb_t, depth_t, kMaxDt + 1e-9);
  if (pairs.empty()) throw InputError("no associable color/depth pairs in " + root.string());
  const std::size_t dropped = rgb.size() + depth.size() - 2 * pairs.size();
  if (dropped > 0) {
    log_warn("tum: " + std::to_string(dropped) + " color/depth entries had no partner within 0.02 s and were dropped");
  }
  std::vector<Dataset::Entry> entries;
  for (auto [c, d] : pairs) entries.push_back({rgb[c].timestamp, root / rgb[c].file, root / depth[d].file});
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return *a.timestamp < *b.timestamp; });

  std::vector<std::optional<PoseParams>> gt(entries.size());
  if (fs::exists(root / "groundtruth.txt")) {
    const auto traj = read_tum_trajectory(root / "groundtruth.txt");
    std::vector<double> gt_t, frame_t;
    for (const auto& sp : traj) gt_t.push_back(sp.timestamp);
    for (const auto& e : entries) frame_t.push_back(*e.timestamp);
    for (auto [f, g] : associate_timestamps(frame_t, gt_t, kMaxDt + 1e-9)) gt[f] = traj[g].pose;
  }
  return Dataset(K, std::move(entries), std::move(gt));
}

Dataset load_directory(const fs::path& root, Intrinsics K) {
  std::vector<Dataset::Entry> entries;
  for (int i = 0;; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06d.png", i);
    const fs::path color = root / "color" / name;
    const fs::path depth = root / "depth" / name;
    const bool has_color = fs::exists(color), has_depth = fs::exists(depth);
    if (!has_color && !has_depth) break;
    if (has_color != has_depth) throw InputError("unreadable image: missing color or depth for frame " + std::string(name));
    entries.push_back({std::nullopt, color, depth});
  }
  if (entries.empty()) throw InputError("no frames found under " + (root / "color").string());
  std::vector<std::optional<PoseParams>> gt(entries.size());
  if (fs::exists(root / "groundtruth.txt")) {
    const auto traj = read_tum_trajectory(root / "groundtruth.txt");
    for (std::size_t i = 0; i < traj.size() && i < entries.size(); ++i) {
      gt[i] = traj[i].pose;
      entries[i].timestamp = traj[i].timestamp;
    }
  }
  return Dataset(K, std::move(entries), std::move(gt));
}

}  // namespace

Dataset load_dataset(const fs::path& path, DatasetFormat format, std::optional<double> depth_scale_override) {
  if (!fs::exists(path)) throw DatasetError("dataset path does not exist: " + path.string());
  try {
    Intrinsics K = read_intrinsics(path / "intrinsics.txt");
    if (depth_scale_override) {
      K.depth_scale = *depth_scale_override;
      K.validate();
    }
    return format == DatasetFormat::kTum ? load_tum(path, K) : load_directory(path, K);
  } catch (const DatasetError&) {
    throw;
  } catch (const InputError& e) {
    throw DatasetError(e.what());
  }
}

std::vector<Vec3> backproject(const Frame& frame, const Intrinsics& K, const PoseParams& T) {
  const Mat3 R = T.rotation();
  std::vector<Vec3> points;
  points.reserve(frame.depth.size());
  for (int v = 0; v < frame.height; ++v) {
    for (int u = 0; u < frame.width; ++u) {
      const double d = frame.depth_at(u, v);
      if (d <= 0.0) continue;
      points.push_back(R * (K.pixel_ray(u, v) * d) + T.t);
    }
  }
  return points;
}

std::optional<Projection> project(const Vec3& p, const Intrinsics& K, const PoseParams& T) {
  const Vec3 c = T.rotation().transpose() * (p - T.t);
  if (c.z() <= 0.0) return std::nullopt;
  return Projection{K.fx * c.x() / c.z() + K.cx, K.fy * c.y() / c.z() + K.cy, c.z()};
}

std::vector<PixelSample> sample_pixels(const Frame& frame, std::size_t count, Rng& rng) {
  std::vector<std::uint32_t> valid;
  valid.reserve(frame.depth.size());
  for (std::uint32_t i = 0; i < frame.depth.size(); ++i) {
    if (frame.depth[i] > 0.0f) valid.push_back(i);
  }
  if (valid.empty()) throw InputError("frame " + std::to_string(frame.index) + " has no valid depth pixels");
  const std::size_t n = std::min(count, valid.size());
  // Partial Fisher-Yates: the first n entries become a uniform sample without replacement.
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, valid.size() - 1);
    std::swap(valid[i], valid[pick(rng)]);
  }
  std::vector<PixelSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int u = static_cast<int>(valid[i] % frame.width);
    const int v = static_cast<int>(valid[i] / frame.width);
    out.push_back({frame.index, u, v, frame.color_at(u, v), frame.depth_at(u, v)});
  }
  return out;
}

}  // namespace priorslam
