#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "priorslam/config.hpp"
#include "priorslam/evaluator.hpp"
#include "priorslam/mesher.hpp"
#include "priorslam/pipeline.hpp"
#include "priorslam/pose.hpp"
#include "priorslam/renderer.hpp"
#include "priorslam/synth.hpp"

namespace py = pybind11;
using namespace priorslam;

namespace {

// Rows are TUM order: tx ty tz qx qy qz qw.
Trajectory to_trajectory(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2 || a.shape(1) != 7) throw InputError("trajectory must be an (N, 7) array: tx ty tz qx qy qz qw");
  auto r = a.unchecked<2>();
  Trajectory t;
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    PoseParams p;
    p.t = Vec3(r(i, 0), r(i, 1), r(i, 2));
    p.q = Vec4(r(i, 6), r(i, 3), r(i, 4), r(i, 5));
    if (p.q.norm() == 0.0) throw InputError("zero quaternion in trajectory row " + std::to_string(i));
    p.q.normalize();
    t.emplace(static_cast<int>(i), p);
  }
  return t;
}

py::array_t<double> poses_to_array(const std::vector<PoseParams>& poses) {
  py::array_t<double> out({static_cast<py::ssize_t>(poses.size()), py::ssize_t{7}});
  auto w = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const auto& p = poses[i];
    const double row[7] = {p.t.x(), p.t.y(), p.t.z(), p.q[1], p.q[2], p.q[3], p.q[0]};
    for (int c = 0; c < 7; ++c) w(static_cast<py::ssize_t>(i), c) = row[c];
  }
  return out;
}

py::dict recon_dict(const ReconMetrics& m) {
  py::dict d;
  d["accuracy_pct"] = m.accuracy_pct;
  d["completeness_pct"] = m.completeness_pct;
  d["f1_pct"] = m.f1_pct;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dense RGB-D SLAM with sparse voxel priors and tri-plane features.";

  static py::exception<InputError> input_error(m, "InputError", PyExc_ValueError);
  static py::exception<DatasetError> dataset_error(m, "DatasetError", input_error.ptr());
  static py::exception<NumericError> numeric_error(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DatasetError& e) {
      py::set_error(dataset_error, e.what());
    } catch (const InputError& e) {
      py::set_error(input_error, e.what());
    } catch (const NumericError& e) {
      py::set_error(numeric_error, e.what());
    }
  });

  m.def(
      "describe_config", [](const std::string& text) { return describe_config(parse_config_text(text)); },
      py::arg("text"), "Parse `key = value` config text and return the fully resolved configuration.");

  m.def(
      "run",
      [](const std::string& text) {
        const SystemConfig cfg = parse_config_text(text);
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run(cfg);
        }
        py::dict d;
        d["poses"] = poses_to_array(r.poses);
        d["ate_cm"] = r.ate_cm ? py::cast(*r.ate_cm) : py::none();
        d["recon"] = r.recon ? py::object(recon_dict(*r.recon)) : py::none();
        d["vertices"] = r.mesh.vertices.size();
        d["triangles"] = r.mesh.triangles.size();
        d["seconds"] = r.seconds;
        return d;
      },
      py::arg("config_text"),
      "Run tracking and mapping from config text. Writes the usual artifacts into run.output and returns a "
      "summary dict with poses as an (N, 7) array.");

  m.def(
      "synthesize",
      [](const std::string& scene, int frames, const std::filesystem::path& out, double noise, std::uint64_t seed,
         double arc) {
        if (frames < 1) throw InputError("frames must be >= 1");
        SynthOptions opt;
        opt.noise_sigma = noise;
        opt.seed = seed;
        generate_sequence(make_scene(scene), room_trajectory(frames, arc), synthetic_intrinsics(), out, opt);
      },
      py::arg("scene"), py::arg("frames"), py::arg("out"), py::arg("noise") = 0.0, py::arg("seed") = 0,
      py::arg("arc") = 40.0, "Render a synthetic RGB-D sequence with ground truth into a directory.");

  m.def(
      "ate_rmse",
      [](const py::array_t<double>& est, const py::array_t<double>& gt) {
        return ate_rmse(to_trajectory(est), to_trajectory(gt));
      },
      py::arg("est"), py::arg("gt"), "Rigidly aligned translation RMSE in centimetres; rows are matched by index.");

  m.def(
      "mesh_metrics",
      [](const std::filesystem::path& rec, const std::filesystem::path& gt, std::size_t samples, double threshold,
         std::uint64_t seed) {
        Rng rng(seed);
        return recon_dict(mesh_metrics(load_ply(rec), load_ply(gt), samples, threshold, rng));
      },
      py::arg("rec"), py::arg("gt"), py::arg("samples") = 200000, py::arg("threshold") = 0.05, py::arg("seed") = 0,
      "Accuracy, completeness and F1 (percent) between two PLY meshes.");

  m.def(
      "load_ply",
      [](const std::filesystem::path& path) {
        const TriangleMesh mesh = load_ply(path);
        py::array_t<double> v({static_cast<py::ssize_t>(mesh.vertices.size()), py::ssize_t{3}});
        py::array_t<std::uint32_t> f({static_cast<py::ssize_t>(mesh.triangles.size()), py::ssize_t{3}});
        auto vw = v.mutable_unchecked<2>();
        auto fw = f.mutable_unchecked<2>();
        for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
          for (int c = 0; c < 3; ++c) vw(static_cast<py::ssize_t>(i), c) = mesh.vertices[i][c];
        for (std::size_t i = 0; i < mesh.triangles.size(); ++i)
          for (int c = 0; c < 3; ++c) fw(static_cast<py::ssize_t>(i), c) = mesh.triangles[i][c];
        return py::make_tuple(v, f);
      },
      py::arg("path"), "Read a PLY mesh as (vertices, faces) arrays.");

  m.def("bell_weight", py::vectorize(bell_weight), py::arg("s"), py::arg("tr"));
  m.def("bell_weight_derivative", py::vectorize(bell_weight_derivative), py::arg("s"), py::arg("tr"));
}
