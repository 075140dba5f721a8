#include "priorslam/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <json.hpp>

namespace priorslam {

namespace {

using nlohmann::json;

constexpr char kMagic[] = "PSCKPT1\n";

struct Blob {
  std::string name;
  std::string dtype;
  std::vector<std::size_t> shape;
  std::vector<char> bytes;
};

template <typename Out, typename In>
Blob make_blob(std::string name, std::vector<std::size_t> shape, const std::vector<In>& values) {
  static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");
  Blob b{std::move(name), std::is_floating_point_v<Out> ? "float32" : "int32", std::move(shape), {}};
  b.bytes.resize(values.size() * sizeof(Out));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Out v = static_cast<Out>(values[i]);
    std::memcpy(b.bytes.data() + i * sizeof(Out), &v, sizeof(Out));
  }
  return b;
}

template <typename T>
std::vector<T> read_values(const Blob& b) {
  std::vector<T> out(b.bytes.size() / sizeof(T));
  std::memcpy(out.data(), b.bytes.data(), out.size() * sizeof(T));
  return out;
}

json vec_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }
Vec3 json_vec(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Scene& scene, double truncation, double mesh_resolution,
                     std::span<const PoseParams> poses) {
  const SparseVolume& vol = scene.volume;
  std::vector<int> voxel_keys;
  for (const auto& k : vol.sorted_voxels()) voxel_keys.insert(voxel_keys.end(), {k.x, k.y, k.z});
  std::vector<int> vertex_keys;
  std::vector<double> weights;
  for (std::uint32_t i = 0; i < vol.vertex_count(); ++i) {
    const auto& k = vol.vertex_key(i);
    vertex_keys.insert(vertex_keys.end(), {k.x, k.y, k.z});
    weights.push_back(vol.weight(i));
  }
  std::vector<double> pose_values;
  for (const auto& p : poses) pose_values.insert(pose_values.end(), {p.q[0], p.q[1], p.q[2], p.q[3], p.t[0], p.t[1], p.t[2]});

  std::vector<Blob> blobs;
  blobs.push_back(make_blob<std::int32_t>("voxels", {vol.voxel_count(), 3}, voxel_keys));
  blobs.push_back(make_blob<std::int32_t>("vertex_keys", {vol.vertex_count(), 3}, vertex_keys));
  blobs.push_back(make_blob<float>("vertex_weights", {vol.vertex_count()}, weights));
  blobs.push_back(make_blob<float>("embeddings", {vol.vertex_count(), kEmbeddingDim}, vol.embeddings().values));
  const auto& planes = scene.planes.features().values;
  blobs.push_back(make_blob<float>("planes", {planes.size() / kPlaneChannels, kPlaneChannels}, planes));
  blobs.push_back(make_blob<float>("geometry_decoder", {GeometryDecoder::Net::kParamCount}, scene.geometry.net.params.values));
  blobs.push_back(make_blob<float>("color_decoder", {ColorDecoder::Net::kParamCount}, scene.color_decoder.net.params.values));
  blobs.push_back(make_blob<float>("poses", {poses.size(), 7}, pose_values));

  json manifest;
  manifest["version"] = 1;
  manifest["voxel_size"] = vol.voxel_size();
  manifest["plane_cell"] = scene.planes.cell_size();
  manifest["bounds_min"] = vec_json(scene.bounds().min);
  manifest["bounds_max"] = vec_json(scene.bounds().max);
  manifest["truncation"] = truncation;
  manifest["mesh_resolution"] = mesh_resolution;
  manifest["groups"] = json::array();
  for (const auto& b : blobs) {
    std::size_t count = 1;
    for (auto s : b.shape) count *= s;
    manifest["groups"].push_back({{"name", b.name}, {"dtype", b.dtype}, {"shape", b.shape}, {"count", count}});
  }
  const std::string text = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint: " + path.string());
  out.write(kMagic, sizeof(kMagic) - 1);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& b : blobs) out.write(b.bytes.data(), static_cast<std::streamsize>(b.bytes.size()));
  if (!out) throw InputError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint: " + path.string());
  char magic[sizeof(kMagic) - 1];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) throw InputError("not a checkpoint file: " + path.string());
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (1u << 30)) throw InputError("corrupt checkpoint manifest: " + path.string());
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  json manifest;
  try {
    manifest = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError("corrupt checkpoint manifest: " + std::string(e.what()));
  }

  std::map<std::string, Blob> blobs;
  for (const auto& g : manifest.at("groups")) {
    Blob b{g.at("name"), g.at("dtype"), g.at("shape").get<std::vector<std::size_t>>(), {}};
    b.bytes.resize(g.at("count").get<std::size_t>() * 4);
    in.read(b.bytes.data(), static_cast<std::streamsize>(b.bytes.size()));
    if (!in) throw InputError("truncated checkpoint: " + path.string());
    blobs.emplace(b.name, std::move(b));
  }
  auto blob = [&](const std::string& name) -> const Blob& {
    auto it = blobs.find(name);
    if (it == blobs.end()) throw InputError("checkpoint is missing group '" + name + "'");
    return it->second;
  };

  const Aabb bounds{json_vec(manifest.at("bounds_min")), json_vec(manifest.at("bounds_max"))};
  Checkpoint ck{Scene(bounds, manifest.at("voxel_size").get<double>(), manifest.at("plane_cell").get<double>()),
                manifest.at("truncation").get<double>(), manifest.at("mesh_resolution").get<double>(), {}};
  Scene& scene = ck.scene;

  const auto voxels = read_values<std::int32_t>(blob("voxels"));
  for (std::size_t i = 0; i + 2 < voxels.size(); i += 3) scene.volume.allocate({voxels[i], voxels[i + 1], voxels[i + 2]});
  const auto keys = read_values<std::int32_t>(blob("vertex_keys"));
  const auto weights = read_values<float>(blob("vertex_weights"));
  const auto embeddings = read_values<float>(blob("embeddings"));
  if (keys.size() != weights.size() * 3 || embeddings.size() != weights.size() * kEmbeddingDim) {
    throw InputError("checkpoint vertex groups disagree in size");
  }
  for (std::size_t v = 0; v < weights.size(); ++v) {
    const auto idx = scene.volume.vertex_index({keys[3 * v], keys[3 * v + 1], keys[3 * v + 2]});
    if (!idx) throw InputError("checkpoint vertex outside allocated voxels");
    Embedding e;
    for (int c = 0; c < kEmbeddingDim; ++c) e[c] = embeddings[v * kEmbeddingDim + c];
    scene.volume.set_embedding(*idx, e);
    scene.volume.set_weight(*idx, weights[v]);
  }
  auto load_group = [&](const std::string& name, ParamGroup& group) {
    const auto values = read_values<float>(blob(name));
    if (values.size() != group.values.size()) throw InputError("checkpoint group '" + name + "' has the wrong size");
    std::copy(values.begin(), values.end(), group.values.begin());
  };
  load_group("planes", scene.planes.features());
  load_group("geometry_decoder", scene.geometry.net.params);
  load_group("color_decoder", scene.color_decoder.net.params);
  const auto poses = read_values<float>(blob("poses"));
  for (std::size_t i = 0; i + 6 < poses.size(); i += 7) {
    PoseParams p;
    p.q = Vec4(poses[i], poses[i + 1], poses[i + 2], poses[i + 3]);
    p.t = Vec3(poses[i + 4], poses[i + 5], poses[i + 6]);
    ck.poses.push_back(normalize(p));
  }
  return ck;
}

}  // namespace priorslam
