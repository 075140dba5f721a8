#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "priorslam/checkpoint.hpp"
#include "priorslam/evaluator.hpp"
#include "priorslam/log.hpp"
#include "priorslam/pipeline.hpp"
#include "priorslam/synth.hpp"

namespace {

using namespace priorslam;

constexpr int kExitInput = 1;
constexpr int kExitDataset = 2;
constexpr int kExitNumeric = 3;

LogLevel parse_level(const std::string& s) {
  if (s == "quiet") return LogLevel::kQuiet;
  if (s == "warn") return LogLevel::kWarn;
  return LogLevel::kInfo;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& output) {
  SystemConfig cfg = parse_config(config_path);
  if (seed) cfg.seed = *seed;
  if (!output.empty()) cfg.output = output;
  set_log_level(parse_level(cfg.log_level));
  const RunResult r = run(cfg);
  std::cout << format_report(r.metrics);
  return 0;
}

int cmd_mesh(const std::string& checkpoint, std::string out, double resolution) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  if (out.empty()) out = std::filesystem::path(checkpoint).replace_extension(".ply").string();
  const TriangleMesh mesh = extract_mesh(ck.scene, resolution > 0.0 ? resolution : ck.mesh_resolution);
  save_ply(mesh, out);
  std::cout << "vertices = " << mesh.vertices.size() << "\ntriangles = " << mesh.triangles.size() << "\nmesh = " << out
            << "\n";
  return 0;
}

int cmd_eval(const std::string& est_path, const std::string& gt_path, const std::string& out) {
  const auto est = read_tum_trajectory(est_path);
  const auto gt = read_tum_trajectory(gt_path);
  std::vector<double> est_t, gt_t;
  for (const auto& p : est) est_t.push_back(p.timestamp);
  for (const auto& p : gt) gt_t.push_back(p.timestamp);
  Trajectory a, b;
  int id = 0;
  for (auto [i, j] : associate_timestamps(est_t, gt_t, 0.02 + 1e-9)) {
    a.emplace(id, est[i].pose);
    b.emplace(id, gt[j].pose);
    ++id;
  }
  const std::vector<std::pair<std::string, std::string>> report{{"pairs", std::to_string(a.size())},
                                                                {"ate_rmse_cm", std::to_string(ate_rmse(a, b))}};
  std::cout << format_report(report);
  if (!out.empty()) write_report(out, report);
  return 0;
}

int cmd_synth(const std::string& scene, int frames, const std::string& out, double noise, std::uint64_t seed,
              double arc) {
  SynthOptions opt;
  opt.noise_sigma = noise;
  opt.seed = seed;
  generate_sequence(make_scene(scene), room_trajectory(frames, arc), synthetic_intrinsics(), out, opt);
  std::cout << "frames = " << frames << "\nout = " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dense RGB-D SLAM with sparse voxel priors"};
  app.require_subcommand(1);

  std::string config_path, output;
  std::uint64_t seed_value = 0;
  auto* run_cmd = app.add_subcommand("run", "Track and map a sequence");
  run_cmd->add_option("--config", config_path, "Config file")->required();
  auto* seed_opt = run_cmd->add_option("--seed", seed_value, "Override run.seed");
  run_cmd->add_option("--output", output, "Override run.output");

  std::string checkpoint, mesh_out;
  double resolution = 0.0;
  auto* mesh_cmd = app.add_subcommand("mesh", "Extract a mesh from a checkpoint");
  mesh_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  mesh_cmd->add_option("--out", mesh_out, "Output PLY (default: checkpoint name with .ply)");
  mesh_cmd->add_option("--resolution", resolution, "Grid spacing in meters (default: value stored in checkpoint)");

  std::string est, gt, report;
  auto* eval_cmd = app.add_subcommand("eval", "ATE RMSE between two TUM trajectories");
  eval_cmd->add_option("--est", est, "Estimated trajectory")->required();
  eval_cmd->add_option("--gt", gt, "Ground-truth trajectory")->required();
  eval_cmd->add_option("--out", report, "Also write the report here");

  std::string scene = "room", synth_out;
  int frames = 50;
  double noise = 0.005, arc = 40.0;
  std::uint64_t synth_seed = 0;
  auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic RGB-D sequence");
  synth_cmd->add_option("--scene", scene, "Scene name (room, plane)");
  synth_cmd->add_option("--frames", frames, "Frame count")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--noise", noise, "Depth noise sigma in meters")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--seed", synth_seed, "Noise seed");
  synth_cmd->add_option("--arc", arc, "Trajectory arc in degrees");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      return cmd_run(config_path, seed_opt->count() ? std::optional(seed_value) : std::nullopt, output);
    }
    if (*mesh_cmd) return cmd_mesh(checkpoint, mesh_out, resolution);
    if (*eval_cmd) return cmd_eval(est, gt, report);
    if (*synth_cmd) return cmd_synth(scene, frames, synth_out, noise, synth_seed, arc);
  } catch (const DatasetError& e) {
    std::cerr << "dataset error: " << e.what() << "\n";
    return kExitDataset;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitInput;
}
