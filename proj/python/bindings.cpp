#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "nbvcalib/error.hpp"
#include "nbvcalib/experiment.hpp"

namespace py = pybind11;
using namespace nbvcalib;

namespace {

Pose pose_from_quat(const Eigen::Vector4d& wxyz, const Vector3& t) {
  return Pose::from_quaternion(Eigen::Quaterniond(wxyz(0), wxyz(1), wxyz(2), wxyz(3)), t);
}

Eigen::Vector4d quat_wxyz(const Pose& p) {
  const Eigen::Quaterniond q = p.quaternion();
  return {q.w(), q.x(), q.y(), q.z()};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Active eye-in-hand calibration: AX = YB least squares, Fisher information, next-best-view.";
  m.attr("__version__") = "0.1.0";

  // Instances carry the error name in `.code`, e.g. "SingularInformation".
  static py::handle error_type =
      PyErr_NewException("nbvcalib._core.CalibrationError", PyExc_RuntimeError, nullptr);
  m.attr("CalibrationError") = error_type;
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const CalibrationError& e) {
      py::object inst = py::reinterpret_borrow<py::object>(error_type)(e.what());
      inst.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), inst.ptr());
    }
  });

  // geometry
  py::class_<Pose>(m, "Pose")
      .def(py::init<>())
      .def(py::init<const Matrix3&, const Vector3&>(), py::arg("rotation"), py::arg("translation"))
      .def_static("from_matrix", &Pose::from_matrix)
      .def_static("from_quaternion", &pose_from_quat, py::arg("wxyz"), py::arg("translation"))
      .def_property_readonly("rotation", &Pose::rotation)
      .def_property_readonly("translation", &Pose::translation)
      .def_property_readonly("quaternion_wxyz", &quat_wxyz)
      .def("matrix", &Pose::matrix)
      .def("inverse", &Pose::inverse)
      .def("act", &Pose::act)
      .def("is_approx", &Pose::is_approx, py::arg("other"), py::arg("tol") = 1e-9)
      .def("__mul__", [](const Pose& a, const Pose& b) { return a * b; })
      .def("__repr__", [](const Pose& p) {
        const Eigen::Vector4d q = quat_wxyz(p);
        const Vector3& t = p.translation();
        return py::str("Pose(q=[{}, {}, {}, {}], t=[{}, {}, {}])").format(q(0), q(1), q(2), q(3), t(0), t(1), t(2));
      });
  m.def("exp_se3", [](const Twist& xi) { return exp_se3(xi); });
  m.def("log_se3", &log_se3);
  m.def("exp_so3", &exp_so3);
  m.def("log_so3", &log_so3);

  // sensing
  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init<>())
      .def_readwrite("fx", &CameraIntrinsics::fx)
      .def_readwrite("fy", &CameraIntrinsics::fy)
      .def_readwrite("cx", &CameraIntrinsics::cx)
      .def_readwrite("cy", &CameraIntrinsics::cy)
      .def_readwrite("width", &CameraIntrinsics::width)
      .def_readwrite("height", &CameraIntrinsics::height);
  py::class_<TargetBoard>(m, "TargetBoard")
      .def_readonly("rows", &TargetBoard::rows)
      .def_readonly("cols", &TargetBoard::cols)
      .def_readonly("spacing", &TargetBoard::spacing)
      .def_readonly("points", &TargetBoard::points)
      .def("__len__", &TargetBoard::size);
  m.def("make_board", &make_board, py::arg("rows"), py::arg("cols"), py::arg("spacing"));
  py::class_<PixelObservation>(m, "PixelObservation")
      .def(py::init([](int id, double u, double v) { return PixelObservation{id, u, v}; }))
      .def_readwrite("marker_id", &PixelObservation::marker_id)
      .def_readwrite("u", &PixelObservation::u)
      .def_readwrite("v", &PixelObservation::v);
  py::class_<MeasurementSet>(m, "MeasurementSet")
      .def(py::init<const Pose&, std::vector<PixelObservation>>(), py::arg("ee_from_base"), py::arg("observations"))
      .def_property_readonly("ee_from_base", &MeasurementSet::ee_from_base)
      .def_property_readonly("observations", &MeasurementSet::observations)
      .def("__len__", &MeasurementSet::size);
  py::class_<NoiseModel>(m, "NoiseModel")
      .def(py::init<>())
      .def_static("none", &NoiseModel::none)
      .def_readwrite("pixel_sigma", &NoiseModel::pixel_sigma)
      .def_readwrite("robot_rot_sigma", &NoiseModel::robot_rot_sigma)
      .def_readwrite("robot_trans_sigma", &NoiseModel::robot_trans_sigma);
  py::class_<CalibrationParams>(m, "CalibrationParams")
      .def(py::init<>())
      .def(py::init([](const Pose& ce, const Pose& bw) { return CalibrationParams{ce, bw}; }),
           py::arg("cam_from_ee"), py::arg("base_from_world"))
      .def_readwrite("cam_from_ee", &CalibrationParams::cam_from_ee)
      .def_readwrite("base_from_world", &CalibrationParams::base_from_world);
  py::class_<Scene>(m, "Scene")
      .def_readwrite("board", &Scene::board)
      .def_readwrite("intrinsics", &Scene::intrinsics)
      .def_readwrite("ground_truth", &Scene::ground_truth)
      .def_readwrite("noise", &Scene::noise);
  m.def("default_scene", &default_scene);
  py::class_<CandidateGeometry>(m, "CandidateGeometry")
      .def(py::init<>())
      .def_readwrite("radius_min", &CandidateGeometry::radius_min)
      .def_readwrite("radius_max", &CandidateGeometry::radius_max)
      .def_readwrite("radius_count", &CandidateGeometry::radius_count)
      .def_readwrite("azimuth_count", &CandidateGeometry::azimuth_count)
      .def_readwrite("elevation_min_deg", &CandidateGeometry::elevation_min_deg)
      .def_readwrite("elevation_max_deg", &CandidateGeometry::elevation_max_deg)
      .def_readwrite("elevation_count", &CandidateGeometry::elevation_count)
      .def_readwrite("roll_deg", &CandidateGeometry::roll_deg)
      .def_readwrite("image_margin_px", &CandidateGeometry::image_margin_px);
  py::class_<CandidateSet>(m, "CandidateSet")
      .def(py::init<>())
      .def(py::init([](std::vector<Pose> poses) { return CandidateSet{std::move(poses)}; }))
      .def_readwrite("poses", &CandidateSet::poses)
      .def("__len__", &CandidateSet::size);
  m.def("look_at_origin", &look_at_origin, py::arg("radius"), py::arg("azimuth"), py::arg("elevation"),
        py::arg("roll") = 0.0);
  m.def("robot_pose_for_camera", &robot_pose_for_camera);
  m.def("cam_from_world", &cam_from_world);
  m.def("generate_candidates", &generate_candidates);
  m.def("predict_observations", &predict_observations, py::arg("theta"), py::arg("ee_from_base"), py::arg("board"),
        py::arg("intrinsics"), py::arg("margin") = 0.0);
  m.def("simulate_measurement", py::overload_cast<const Scene&, const Pose&, std::uint64_t>(&simulate_measurement),
        py::arg("scene"), py::arg("commanded_ee_from_base"), py::arg("seed"));

  // estimator
  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("max_iterations", &SolverConfig::max_iterations)
      .def_readwrite("initial_damping", &SolverConfig::initial_damping)
      .def_readwrite("relative_cost_tolerance", &SolverConfig::relative_cost_tolerance);
  py::class_<SolveReport>(m, "SolveReport")
      .def_readonly("theta", &SolveReport::theta)
      .def_readonly("iterations", &SolveReport::iterations)
      .def_readonly("initial_cost", &SolveReport::initial_cost)
      .def_readonly("final_cost", &SolveReport::final_cost)
      .def_readonly("cost_trace", &SolveReport::cost_trace)
      .def_property_readonly("reason", [](const SolveReport& r) { return std::string(to_string(r.reason)); })
      .def("converged", &SolveReport::converged)
      .def("rms_residual", &SolveReport::rms_residual);
  m.def("residuals", [](const CalibrationParams& t, const MeasurementSet& z, const TargetBoard& b,
                        const CameraIntrinsics& K) { return residuals(t, z, b, K).values; });
  m.def("jacobian", [](const CalibrationParams& t, const MeasurementSet& z, const TargetBoard& b,
                       const CameraIntrinsics& K) { return jacobian_block(t, z, b, K).stacked(); });
  m.def(
      "optimize",
      [](const CalibrationParams& init, const std::vector<MeasurementSet>& sets, const TargetBoard& b,
         const CameraIntrinsics& K, const SolverConfig& cfg) { return optimize(init, sets, b, K, cfg); },
      py::arg("initial"), py::arg("sets"), py::arg("board"), py::arg("intrinsics"),
        py::arg("config") = SolverConfig{});
  m.def("closed_form_init", [](const std::vector<Pose>& wc, const std::vector<Pose>& eb) {
    return closed_form_init(wc, eb);
  });
  m.def("solve_pnp", [](const TargetBoard& b, const std::vector<PixelObservation>& obs, const CameraIntrinsics& K) {
    return solve_pnp(b, obs, K);
  });
  m.def("initialize_from_measurements", [](const std::vector<MeasurementSet>& sets, const TargetBoard& b,
                                           const CameraIntrinsics& K) { return initialize_from_measurements(sets, b, K); });

  // information gain
  py::class_<InfoState>(m, "InfoState")
      .def_readonly("information", &InfoState::information)
      .def_readonly("covariance", &InfoState::covariance)
      .def_readonly("entropy", &InfoState::entropy)
      .def_readonly("set_count", &InfoState::set_count);
  py::class_<CandidateScore>(m, "CandidateScore")
      .def_readonly("index", &CandidateScore::index)
      .def_readonly("predicted_entropy", &CandidateScore::predicted_entropy)
      .def_readonly("information_gain", &CandidateScore::information_gain)
      .def_readonly("visible_markers", &CandidateScore::visible_markers);
  m.def("entropy_from_information", &entropy_from_information, py::arg("information"),
        py::arg("covariance_scale") = 1.0);
  m.def("information_state", [](const CalibrationParams& t, const std::vector<MeasurementSet>& sets,
                                const TargetBoard& b, const CameraIntrinsics& K,
                                double scale) { return information_state(t, sets, b, K, scale); },
        py::arg("theta"), py::arg("sets"), py::arg("board"), py::arg("intrinsics"), py::arg("covariance_scale") = 1.0);
  m.def("predict_information_gain",
        [](const CalibrationParams& t, const std::vector<MeasurementSet>& sets, const Pose& cand, const TargetBoard& b,
           const CameraIntrinsics& K) { return predict_information_gain(t, sets, cand, b, K); });
  m.def("select_nbv", [](const CalibrationParams& t, const std::vector<MeasurementSet>& sets,
                         const CandidateSet& c, const TargetBoard& b, const CameraIntrinsics& K) {
    const NbvSelection s = select_nbv(t, sets, c, b, K);
    return py::make_tuple(s.best, s.scores);
  });

  // evaluation
  py::class_<MetricsRecord>(m, "MetricsRecord")
      .def_readonly("e_at_mm", &MetricsRecord::e_at_mm)
      .def_readonly("e_aR_deg", &MetricsRecord::e_aR_deg)
      .def_readonly("e_rt_mm", &MetricsRecord::e_rt_mm)
      .def_readonly("e_rR_deg", &MetricsRecord::e_rR_deg)
      .def_readonly("e_rmse_px", &MetricsRecord::e_rmse_px)
      .def_readonly("e_rmse_frame_px", &MetricsRecord::e_rmse_frame_px);
  m.def("pearson_correlation", [](const std::vector<double>& x, const std::vector<double>& y) {
    return pearson_correlation(x, y);
  });

  // experiments and files
  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_readwrite("scene", &ExperimentConfig::scene)
      .def_readwrite("candidates", &ExperimentConfig::candidates)
      .def_readwrite("seeds", &ExperimentConfig::seeds)
      .def_readwrite("validation_size", &ExperimentConfig::validation_size)
      .def_readwrite("scatter", &ExperimentConfig::scatter)
      .def_readwrite("out_dir", &ExperimentConfig::out_dir)
      .def_property(
          "policies",
          [](const ExperimentConfig& c) {
            std::vector<std::string> out;
            for (const auto& p : c.policies) out.emplace_back(to_string(p.kind));
            return out;
          },
          [](ExperimentConfig& c, const std::vector<std::string>& names) {
            c.policies.clear();
            for (const auto& n : names) c.policies.push_back({parse_policy(n)});
          })
      .def_property(
          "max_additional_views", [](const ExperimentConfig& c) { return c.nbv.max_additional_views; },
          [](ExperimentConfig& c, std::size_t v) { c.nbv.max_additional_views = v; });
  m.def("default_experiment_config", &default_experiment_config);
  m.def("load_config", &load_config);
  m.def("save_config", &save_config);
  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](const CameraIntrinsics& K, const TargetBoard& b, std::vector<MeasurementSet> sets) {
             return Dataset{K, b, std::move(sets)};
           }),
           py::arg("intrinsics"), py::arg("board"), py::arg("sets"))
      .def_readwrite("intrinsics", &Dataset::intrinsics)
      .def_readwrite("board", &Dataset::board)
      .def_readwrite("sets", &Dataset::sets);
  m.def("load_dataset", &load_dataset);
  m.def("save_dataset", &save_dataset);
  m.def("load_candidates", &load_candidates);
  m.def("save_candidates", &save_candidates);

  py::class_<ExperimentResult>(m, "ExperimentResult")
      .def_readonly("failures", &ExperimentResult::failures)
      .def_property_readonly("run_count", [](const ExperimentResult& r) { return r.runs.size(); })
      .def("curves_csv", [](const ExperimentResult& r) { return curves_csv(r); })
      .def("scatter_csv", [](const ExperimentResult& r) { return scatter_csv(r); })
      .def("summary_json", [](const ExperimentResult& r) { return summary_json(r); })
      .def("write", [](const ExperimentResult& r, const std::filesystem::path& dir) {
        write_experiment_outputs(r, dir);
      });
  m.def("run_experiment", &run_experiment, py::call_guard<py::gil_scoped_release>());
  m.def("rank_candidates", [](const Dataset& d, const CandidateSet& c) {
    const CandidateRanking r = rank_candidates(d, c);
    return py::make_tuple(r.calibration.solve.theta, r.calibration.info.entropy, r.scores);
  });
}
