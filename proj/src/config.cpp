#include "priorslam/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace priorslam {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw InputError("expected a number, got '" + v + "'");
  }
  if (pos != v.size()) throw InputError("expected a number, got '" + v + "'");
  return out;
}

long long parse_int(const std::string& v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw InputError("expected an integer, got '" + v + "'");
  return out;
}

Vec3 parse_vec3(const std::string& v) {
  std::istringstream ss(v);
  Vec3 out;
  std::string extra;
  if (!(ss >> out[0] >> out[1] >> out[2]) || (ss >> extra)) throw InputError("expected three numbers, got '" + v + "'");
  return out;
}

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt_vec(const Vec3& v) { return fmt(v[0]) + " " + fmt(v[1]) + " " + fmt(v[2]); }

const char* prior_name(PriorMode m) {
  switch (m) {
    case PriorMode::kAnalytic:
      return "analytic";
    case PriorMode::kLearned:
      return "learned";
    case PriorMode::kNone:
      return "none";
  }
  return "analytic";
}

struct Field {
  std::function<void(SystemConfig&, const std::string&)> set;
  std::function<std::string(const SystemConfig&)> get;
};

template <typename T>
Field int_field(T SystemConfig::*section, auto member) {
  return {[=](SystemConfig& c, const std::string& v) {
            const long long x = parse_int(v);
            using M = std::remove_reference_t<decltype((c.*section).*member)>;
            if (x < 0 && std::is_unsigned_v<M>) throw InputError("value must be non-negative");
            if (x > static_cast<long long>(std::numeric_limits<int>::max())) throw InputError("value too large");
            (c.*section).*member = static_cast<M>(x);
          },
          [=](const SystemConfig& c) { return std::to_string((c.*section).*member); }};
}

template <typename T>
Field double_field(T SystemConfig::*section, double T::*member) {
  return {[=](SystemConfig& c, const std::string& v) { (c.*section).*member = parse_double(v); },
          [=](const SystemConfig& c) { return fmt((c.*section).*member); }};
}

const std::map<std::string, Field>& fields() {
  using C = SystemConfig;
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["dataset.path"] = {[](C& c, const std::string& v) { c.dataset.path = v; },
                         [](const C& c) { return c.dataset.path.string(); }};
    t["dataset.format"] = {[](C& c, const std::string& v) { c.dataset.format = parse_dataset_format(v); },
                           [](const C& c) {
                             return std::string(c.dataset.format == DatasetFormat::kTum ? "tum" : "directory");
                           }};
    t["dataset.depth_scale"] = {[](C& c, const std::string& v) { c.dataset.depth_scale = parse_double(v); },
                                [](const C& c) { return c.dataset.depth_scale ? fmt(*c.dataset.depth_scale) : std::string(); }};
    t["dataset.max_frames"] = int_field(&C::dataset, &C::DatasetSection::max_frames);

    t["scene.voxel_size"] = double_field(&C::scene, &C::SceneSection::voxel_size);
    t["scene.plane_cell"] = double_field(&C::scene, &C::SceneSection::plane_cell);
    t["scene.prior"] = {[](C& c, const std::string& v) {
                          if (v == "analytic") c.scene.prior = PriorMode::kAnalytic;
                          else if (v == "learned") c.scene.prior = PriorMode::kLearned;
                          else if (v == "none") c.scene.prior = PriorMode::kNone;
                          else throw InputError("expected analytic, learned or none, got '" + v + "'");
                        },
                        [](const C& c) { return std::string(prior_name(c.scene.prior)); }};
    t["scene.encoder"] = {[](C& c, const std::string& v) { c.scene.encoder = v; },
                          [](const C& c) { return c.scene.encoder.string(); }};
    t["scene.bounds_min"] = {[](C& c, const std::string& v) {
                               if (!c.scene.bounds) c.scene.bounds = Aabb{};
                               c.scene.bounds->min = parse_vec3(v);
                             },
                             [](const C& c) { return c.scene.bounds ? fmt_vec(c.scene.bounds->min) : std::string(); }};
    t["scene.bounds_max"] = {[](C& c, const std::string& v) {
                               if (!c.scene.bounds) c.scene.bounds = Aabb{};
                               c.scene.bounds->max = parse_vec3(v);
                             },
                             [](const C& c) { return c.scene.bounds ? fmt_vec(c.scene.bounds->max) : std::string(); }};
    t["scene.bounds_margin"] = double_field(&C::scene, &C::SceneSection::bounds_margin);
    t["scene.plane_init_std"] = double_field(&C::scene, &C::SceneSection::plane_init_std);

    t["sampling.truncation"] = double_field(&C::sampling, &SamplingConfig::tr);
    t["sampling.coarse"] = int_field(&C::sampling, &SamplingConfig::n_coarse);
    t["sampling.fine"] = int_field(&C::sampling, &SamplingConfig::n_fine);
    t["sampling.near_factor"] = double_field(&C::sampling, &SamplingConfig::near_factor);
    t["sampling.far_factor"] = double_field(&C::sampling, &SamplingConfig::far_factor);

    t["tracking.iters"] = int_field(&C::tracking, &TrackingConfig::iterations);
    t["tracking.pixels"] = int_field(&C::tracking, &TrackingConfig::pixels);
    t["tracking.lr_rotation"] = double_field(&C::tracking, &TrackingConfig::lr_rotation);
    t["tracking.lr_translation"] = double_field(&C::tracking, &TrackingConfig::lr_translation);

    t["mapping.interval"] = {[](C& c, const std::string& v) {
                               if (v == "inf" || v == "never") {
                                 c.mapping.interval = 0;
                                 return;
                               }
                               const long long x = parse_int(v);
                               if (x < 0 || x > std::numeric_limits<int>::max()) {
                                 throw InputError("value out of range: " + v);
                               }
                               c.mapping.interval = static_cast<int>(x);
                             },
                             [](const C& c) { return c.mapping.interval == 0 ? std::string("inf")
                                                                            : std::to_string(c.mapping.interval); }};
    t["mapping.iters"] = int_field(&C::mapping, &MappingConfig::iterations);
    t["mapping.pixels"] = int_field(&C::mapping, &MappingConfig::pixels);
    t["mapping.pixels_per_frame"] = int_field(&C::mapping, &MappingConfig::pixels_per_frame);
    t["mapping.recent_frames"] = {[](C& c, const std::string& v) { c.mapping.selection.recent = static_cast<int>(parse_int(v)); },
                                  [](const C& c) { return std::to_string(c.mapping.selection.recent); }};
    t["mapping.covisible_frames"] = {
        [](C& c, const std::string& v) { c.mapping.selection.covisible = static_cast<int>(parse_int(v)); },
        [](const C& c) { return std::to_string(c.mapping.selection.covisible); }};
    t["mapping.random_frames"] = {[](C& c, const std::string& v) { c.mapping.selection.random = static_cast<int>(parse_int(v)); },
                                  [](const C& c) { return std::to_string(c.mapping.selection.random); }};
    t["mapping.min_covisibility"] = {
        [](C& c, const std::string& v) { c.mapping.selection.min_covisibility = parse_double(v); },
        [](const C& c) { return fmt(c.mapping.selection.min_covisibility); }};
    t["mapping.strategy"] = {[](C& c, const std::string& v) {
                               if (v == "all_frames") c.mapping.strategy = MappingStrategy::kAllFrames;
                               else if (v == "keyframe") c.mapping.strategy = MappingStrategy::kKeyframe;
                               else throw InputError("expected all_frames or keyframe, got '" + v + "'");
                             },
                             [](const C& c) {
                               return std::string(c.mapping.strategy == MappingStrategy::kAllFrames ? "all_frames"
                                                                                                    : "keyframe");
                             }};
    t["mapping.keyframe_stride"] = int_field(&C::mapping, &MappingConfig::keyframe_stride);
    t["mapping.keyframe_recent"] = int_field(&C::mapping, &MappingConfig::keyframe_recent);
    t["mapping.keyframe_covisible"] = int_field(&C::mapping, &MappingConfig::keyframe_covisible);
    t["mapping.lr_embeddings"] = double_field(&C::mapping, &MappingConfig::lr_embeddings);
    t["mapping.lr_planes"] = double_field(&C::mapping, &MappingConfig::lr_planes);
    t["mapping.lr_decoders"] = double_field(&C::mapping, &MappingConfig::lr_decoders);
    t["mapping.lr_poses"] = double_field(&C::mapping, &MappingConfig::lr_poses);

    t["objective.rgb"] = double_field(&C::weights, &ObjectiveWeights::rgb);
    t["objective.depth"] = double_field(&C::weights, &ObjectiveWeights::depth);
    t["objective.fs"] = double_field(&C::weights, &ObjectiveWeights::fs);
    t["objective.sdf"] = double_field(&C::weights, &ObjectiveWeights::sdf);

    t["eval.mesh_resolution"] = double_field(&C::eval, &C::EvalSection::mesh_resolution);
    t["eval.samples"] = int_field(&C::eval, &C::EvalSection::samples);
    t["eval.threshold"] = double_field(&C::eval, &C::EvalSection::threshold);
    t["eval.gt_mesh"] = {[](C& c, const std::string& v) { c.eval.gt_mesh = v; },
                         [](const C& c) { return c.eval.gt_mesh.string(); }};
    t["eval.gt_scene"] = {[](C& c, const std::string& v) { c.eval.gt_scene = v; },
                          [](const C& c) { return c.eval.gt_scene; }};

    t["run.seed"] = {[](C& c, const std::string& v) {
                       const long long x = parse_int(v);
                       if (x < 0) throw InputError("seed must be non-negative");
                       c.seed = static_cast<std::uint64_t>(x);
                     },
                     [](const C& c) { return std::to_string(c.seed); }};
    t["run.output"] = {[](C& c, const std::string& v) { c.output = v; }, [](const C& c) { return c.output.string(); }};
    t["run.log_level"] = {[](C& c, const std::string& v) {
                            if (v != "quiet" && v != "warn" && v != "info") {
                              throw InputError("expected quiet, warn or info, got '" + v + "'");
                            }
                            c.log_level = v;
                          },
                          [](const C& c) { return c.log_level; }};
    return t;
  }();
  return table;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InputError("config: " + what);
}

}  // namespace

void SystemConfig::validate() const {
  require(dataset.max_frames >= 0, "dataset.max_frames must be >= 0");
  require(!dataset.depth_scale || *dataset.depth_scale > 0.0, "dataset.depth_scale must be > 0");
  require(scene.voxel_size > 0.0 && scene.voxel_size <= 10.0, "scene.voxel_size must be in (0, 10]");
  require(scene.plane_cell > 0.0 && scene.plane_cell <= 10.0, "scene.plane_cell must be in (0, 10]");
  require(scene.bounds_margin >= 0.0, "scene.bounds_margin must be >= 0");
  require(scene.plane_init_std >= 0.0, "scene.plane_init_std must be >= 0");
  if (scene.bounds) {
    require((scene.bounds->max.array() > scene.bounds->min.array()).all(),
            "scene.bounds_max must exceed scene.bounds_min on every axis (set both)");
  }
  require(scene.prior != PriorMode::kLearned || !scene.encoder.empty(), "scene.prior = learned needs scene.encoder");
  require(sampling.tr > 0.0, "sampling.truncation must be > 0");
  require(sampling.n_coarse >= 1, "sampling.coarse must be >= 1");
  require(sampling.n_fine >= 0, "sampling.fine must be >= 0");
  require(sampling.near_factor >= 0.0 && sampling.near_factor < sampling.far_factor,
          "sampling.near_factor must be in [0, far_factor)");
  require(tracking.iterations >= 0, "tracking.iters must be >= 0");
  require(tracking.pixels >= 1, "tracking.pixels must be >= 1");
  require(tracking.lr_rotation > 0.0 && tracking.lr_translation > 0.0, "tracking learning rates must be > 0");
  require(mapping.interval >= 0, "mapping.interval must be >= 0 (0 or inf disables mapping)");
  require(mapping.iterations >= 0, "mapping.iters must be >= 0");
  require(mapping.pixels >= 1, "mapping.pixels must be >= 1");
  require(mapping.pixels_per_frame >= 1, "mapping.pixels_per_frame must be >= 1");
  require(mapping.selection.recent >= 0 && mapping.selection.covisible >= 0 && mapping.selection.random >= 0 &&
              mapping.selection.budget() >= 1,
          "mapping frame budget must be non-negative and total >= 1");
  require(mapping.selection.min_covisibility >= 0.0 && mapping.selection.min_covisibility <= 1.0,
          "mapping.min_covisibility must be in [0, 1]");
  require(mapping.keyframe_stride >= 1, "mapping.keyframe_stride must be >= 1");
  require(mapping.keyframe_recent >= 1 && mapping.keyframe_covisible >= 0, "keyframe counts out of range");
  require(mapping.lr_embeddings > 0.0 && mapping.lr_planes > 0.0 && mapping.lr_decoders > 0.0 && mapping.lr_poses > 0.0,
          "mapping learning rates must be > 0");
  require(weights.rgb >= 0.0 && weights.depth >= 0.0 && weights.fs >= 0.0 && weights.sdf >= 0.0,
          "objective weights must be >= 0");
  require(eval.mesh_resolution >= 0.0, "eval.mesh_resolution must be >= 0");
  require(eval.samples >= 1, "eval.samples must be >= 1");
  require(eval.threshold > 0.0, "eval.threshold must be > 0");
}

SystemConfig parse_config_text(const std::string& text) {
  SystemConfig cfg;
  std::map<std::string, int> set_on;
  std::istringstream in(text);
  std::string raw;
  for (int line_no = 1; std::getline(in, raw); ++line_no) {
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw InputError(where + "expected 'section.key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.find('.') == std::string::npos || value.empty()) throw InputError(where + "expected 'section.key = value'");
    const auto it = fields().find(key);
    if (it == fields().end()) throw InputError(where + "unknown key '" + key + "'");
    try {
      it->second.set(cfg, value);
    } catch (const InputError& e) {
      throw InputError(where + key + ": " + e.what());
    }
    set_on[key] = line_no;
  }
  try {
    cfg.validate();
  } catch (const InputError& e) {
    // Name the line of the key the message leads with, when it came from the text.
    const std::string msg = e.what();
    std::size_t first = std::string::npos;
    int line_no = 0;
    for (const auto& [key, line] : set_on) {
      const auto at = msg.find(key);
      if (at < first) {
        first = at;
        line_no = line;
      }
    }
    if (line_no > 0) throw InputError("config line " + std::to_string(line_no) + ": " + msg);
    throw;
  }
  return cfg;
}

SystemConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string describe_config(const SystemConfig& cfg) {
  std::string out;
  for (const auto& [key, field] : fields()) {
    const std::string value = field.get(cfg);
    out += value.empty() ? "# " + key + " unset\n" : key + " = " + value + "\n";
  }
  return out;
}

}  // namespace priorslam
