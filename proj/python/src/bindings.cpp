#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ctevo/config.hpp"
#include "ctevo/error.hpp"
#include "ctevo/metrics.hpp"
#include "ctevo/pipeline.hpp"
#include "ctevo/se3.hpp"
#include "ctevo/stereo_camera.hpp"
#include "ctevo/trajectory.hpp"
#include "ctevo/wnoa.hpp"

#include <sstream>

namespace py = pybind11;
using namespace ctevo;

namespace {

Pose to_pose(const Matrix4& m) { return Pose::from_matrix(m); }

py::dict table_dict(const ErrorTable& t) {
  py::dict out;
  auto row = [](const AggregateRow& r) {
    py::dict d;
    d["max"] = r.max;
    d["max_pct"] = r.max_pct;
    d["final_pct"] = r.final_pct;
    d["rms"] = r.rms;
    d["stdev"] = r.stdev;
    return d;
  };
  out["translation"] = row(t.translation);
  out["rotation"] = row(t.rotation);
  out["se3"] = row(t.se3);
  return out;
}

py::dict report_dict(const ErrorReport& r) {
  py::dict out;
  out["global"] = table_dict(r.global);
  out["relative"] = table_dict(r.relative);
  out["samples"] = r.samples.size();
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Continuous-time stereo event-camera visual odometry";

  static py::exception<ctevo::Error> error_type(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ctevo::Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  m.def("hat", &hat);
  m.def("vee", &vee);
  m.def("exp_map", [](const Twist& xi) { return exp_map(xi).matrix(); }, "4x4 pose from a twist [v; omega]");
  m.def("log_map", [](const Matrix4& T) { return log_map(to_pose(T)); });
  m.def("adjoint", [](const Matrix4& T) { return adjoint(to_pose(T)); });
  m.def("left_jacobian", &left_jacobian);
  m.def("left_jacobian_inv", &left_jacobian_inv);

  py::class_<StereoCameraModel>(m, "StereoCamera")
      .def(py::init<double, double, double, double, double, int, int>(), py::arg("fu"), py::arg("fv"),
           py::arg("cu"), py::arg("cv"), py::arg("baseline"), py::arg("width"), py::arg("height"))
      .def_property_readonly("baseline", &StereoCameraModel::baseline)
      .def_property_readonly("width", &StereoCameraModel::width)
      .def_property_readonly("height", &StereoCameraModel::height)
      .def("project", [](const StereoCameraModel& c, const Vector3& p) { return c.project(homogeneous(p)); })
      .def("triangulate", [](const StereoCameraModel& c, const Vector3& y) { return euclidean(c.triangulate(y)); });

  m.def(
      "interpolate",
      [](const std::vector<double>& times, const std::vector<Matrix4>& poses, const std::vector<Twist>& velocities,
         double tau) {
        if (times.size() != poses.size() || times.size() != velocities.size()) {
          throw ctevo::Error(ErrorCode::InvalidArgument, "times, poses and velocities differ in length");
        }
        std::vector<TrajectoryState> knots;
        for (std::size_t i = 0; i < times.size(); ++i) knots.push_back({to_pose(poses[i]), velocities[i], times[i]});
        const InterpolatedState s = ContinuousTrajectory(knots).query(tau);
        return py::make_tuple(s.pose.matrix(), s.velocity);
      },
      py::arg("times"), py::arg("poses"), py::arg("velocities"), py::arg("tau"),
      "Pose and velocity of the WNOA interpolant through the knots at tau");

  m.def("default_config_text", [] {
    std::ostringstream out;
    write_config(out, PipelineConfig{});
    return out.str();
  });
  m.def(
      "simulate",
      [](const std::string& config_path, const std::string& out_dir, std::optional<std::uint64_t> seed) {
        PipelineConfig c = config_path.empty() ? PipelineConfig{} : load_config(config_path);
        if (seed) apply_seed(c, *seed);
        simulate_dataset(c, out_dir);
      },
      py::arg("config_path"), py::arg("out_dir"), py::arg("seed") = py::none());
  m.def(
      "run",
      [](const std::string& config_path, const std::string& out_dir, const std::string& events,
         const std::string& tracklets, const std::string& gt, const std::string& eval_times) {
        RunRequest req{events, tracklets, gt, eval_times, out_dir};
        const RunResult r = run_pipeline(load_config(config_path), req);
        py::dict out;
        out["knots"] = r.estimate.knots.size();
        out["windows"] = r.estimate.diagnostics.size();
        std::size_t ok = 0;
        for (const auto& d : r.estimate.diagnostics) ok += d.ok;
        out["windows_solved"] = ok;
        out["report"] = r.report ? py::object(report_dict(*r.report)) : py::none();
        return out;
      },
      py::arg("config_path"), py::arg("out_dir"), py::arg("events") = "", py::arg("tracklets") = "",
      py::arg("gt") = "", py::arg("eval_times") = "");
  m.def(
      "evaluate",
      [](const std::string& est, const std::string& gt, const std::string& eval_times, const std::string& out_dir) {
        return report_dict(evaluate_files(est, gt, eval_times, out_dir));
      },
      py::arg("est"), py::arg("gt"), py::arg("eval_times") = "", py::arg("out_dir") = "");
}
