#include "nbvcalib/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "nbvcalib/error.hpp"

namespace nbvcalib {

namespace {

using json = nlohmann::json;

struct Moments {
  std::vector<double> values;

  void add(double v) {
    if (!std::isnan(v)) values.push_back(v);
  }
  json to_json() const {
    if (values.empty()) return {{"mean", nullptr}, {"std", nullptr}, {"n", 0}};
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double sd =
        values.size() > 1 ? std::sqrt(var / static_cast<double>(values.size() - 1)) : 0.0;
    return {{"mean", mean}, {"std", sd}, {"n", values.size()}};
  }
};

json pose_json(const Pose& pose) {
  const Eigen::Quaterniond q = pose.quaternion();
  const Vector3& t = pose.translation();
  return {{"quaternion_wxyz", {q.w(), q.x(), q.y(), q.z()}}, {"translation_m", {t.x(), t.y(), t.z()}}};
}

const RunResult* find_run(const ExperimentResult& result, PolicyKind kind, std::uint64_t seed) {
  for (const auto& run : result.runs) {
    if (run.policy.kind == kind && run.seed == seed) return &run;
  }
  return nullptr;
}

void scatter_for_seed(const ExperimentConfig& config, const CandidateSet& candidates,
                      const Validator& validator, const RunResult& run,
                      std::vector<ScatterPoint>& out) {
  const auto& report = run.report;
  if (report.iterations.empty()) return;
  const Scene& scene = config.scene;
  const CalibrationParams theta0 = report.iterations.front().theta;
  const std::size_t k0 = report.initial_indices.size();
  const std::vector<MeasurementSet> initial(report.measurements.begin(),
                                            report.measurements.begin() + static_cast<std::ptrdiff_t>(k0));

  // Replays the run's simulator so the initial data matches, then branches
  // once per candidate.
  Simulator base(scene, simulator_seed(run.seed));
  for (const auto i : report.initial_indices) base.measure(i, candidates.poses[i]);

  const InfoState info = information_state(theta0, initial, scene.board, scene.intrinsics,
                                           config.nbv.covariance_scale);
  const double rmse0 = validator(theta0).e_rmse_px;
  for (const auto& score : score_candidates(info, theta0, candidates, scene.board, scene.intrinsics)) {
    Simulator branch = base;
    std::vector<MeasurementSet> sets = initial;
    try {
      sets.push_back(branch.measure(score.index, candidates.poses[score.index]));
      const SolveReport solve = optimize(theta0, sets, scene.board, scene.intrinsics, config.nbv.solver);
      const double rmse1 = validator(solve.theta).e_rmse_px;
      out.push_back({run.seed, score.index, score.information_gain, rmse0 - rmse1});
    } catch (const CalibrationError&) {
      // candidate not measurable under noise; no pair
    }
  }
}

}  // namespace

Validator make_validator(const Scene& scene, const CandidateGeometry& geometry, std::size_t size,
                         std::uint64_t seed) {
  const std::vector<Pose> poses = sample_cap_poses(geometry, scene.board, scene.intrinsics,
                                                   scene.ground_truth, size,
                                                   validation_pose_seed(seed));
  std::vector<MeasurementSet> frames;
  frames.reserve(poses.size());
  for (std::size_t k = 0; k < poses.size(); ++k) {
    frames.push_back(simulate_measurement(scene, poses[k], validation_noise_seed(seed, k)));
  }
  return Validator(std::move(frames), scene.board, scene.intrinsics, scene.ground_truth);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Scene& scene = config.scene;
  ExperimentResult result;
  result.candidates =
      generate_candidates(config.candidates, scene.board, scene.intrinsics, scene.ground_truth);

  std::map<std::uint64_t, Validator> validators;
  for (const auto seed : config.seeds) {
    if (!validators.contains(seed)) {
      validators.emplace(seed, make_validator(scene, config.candidates, config.validation_size, seed));
    }
  }

  for (const auto& policy : config.policies) {
    for (const auto seed : config.seeds) {
      const Validator& validator = validators.at(seed);
      RunResult& run = result.runs.emplace_back();
      run.policy = policy;
      run.seed = seed;
      const std::string context =
          "policy=" + std::string(to_string(policy.kind)) + ", seed=" + std::to_string(seed);
      try {
        const auto initial =
            draw_initial_views(result.candidates, config.nbv.initial_sets, initial_view_seed(seed));
        Simulator sim(scene, simulator_seed(seed));
        run.report = run_active_calibration(
            config.nbv, sim, result.candidates, initial, make_selector(policy, policy_seed(seed)),
            [&validator](const CalibrationParams& theta) { return validator(theta); });
      } catch (const CalibrationError& e) {
        run.report.termination = Termination::kFailed;
        run.report.failure = e.what();
      }
      if (run.report.termination == Termination::kFailed) {
        result.failures.push_back(context + ", iteration=" +
                                  std::to_string(run.report.iterations.size()) + ": " +
                                  run.report.failure);
      }
    }
  }

  if (config.scatter) {
    for (const auto seed : config.seeds) {
      const RunResult* run = find_run(result, PolicyKind::kNbv, seed);
      if (run == nullptr) continue;
      scatter_for_seed(config, result.candidates, validators.at(seed), *run, result.scatter);
    }
  }
  return result;
}

std::string curves_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "policy,seed,iteration,entropy_nats,predicted_ig_nats,e_at_mm,e_aR_deg,e_rt_mm,e_rR_deg,"
         "e_rmse_px,candidate_index,e_rmse_frame_px\n";
  for (const auto& run : result.runs) {
    for (const auto& rec : run.report.iterations) {
      const MetricsRecord m = rec.metrics.value_or(MetricsRecord{});
      out << to_string(run.policy.kind) << ',' << run.seed << ',' << rec.iteration << ','
          << format_double(rec.entropy) << ',' << format_double(rec.predicted_gain) << ','
          << format_double(m.e_at_mm) << ',' << format_double(m.e_aR_deg) << ','
          << format_double(m.e_rt_mm) << ',' << format_double(m.e_rR_deg) << ','
          << format_double(m.e_rmse_px) << ',';
      if (rec.chosen_index) out << *rec.chosen_index;
      out << ',' << format_double(m.e_rmse_frame_px) << '\n';
    }
  }
  return out.str();
}

std::string scatter_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "seed,candidate_index,predicted_ig_nats,rmse_reduction_px\n";
  for (const auto& p : result.scatter) {
    out << p.seed << ',' << p.candidate_index << ',' << format_double(p.predicted_ig) << ','
        << format_double(p.rmse_reduction_px) << '\n';
  }
  return out.str();
}

std::string summary_json(const ExperimentResult& result) {
  json doc = {{"format", "nbvcalib-summary"}, {"version", kFormatVersion}};

  // Per policy, per iteration moments, in first-seen policy order.
  std::vector<PolicyKind> order;
  for (const auto& run : result.runs) {
    if (std::find(order.begin(), order.end(), run.policy.kind) == order.end()) {
      order.push_back(run.policy.kind);
    }
  }
  json policies = json::object();
  for (const auto kind : order) {
    std::vector<std::map<std::string, Moments>> per_iter;
    for (const auto& run : result.runs) {
      if (run.policy.kind != kind) continue;
      for (const auto& rec : run.report.iterations) {
        if (per_iter.size() <= rec.iteration) per_iter.resize(rec.iteration + 1);
        auto& row = per_iter[rec.iteration];
        row["entropy_nats"].add(rec.entropy);
        row["predicted_ig_nats"].add(rec.predicted_gain);
        const MetricsRecord m = rec.metrics.value_or(MetricsRecord{});
        row["e_at_mm"].add(m.e_at_mm);
        row["e_aR_deg"].add(m.e_aR_deg);
        row["e_rt_mm"].add(m.e_rt_mm);
        row["e_rR_deg"].add(m.e_rR_deg);
        row["e_rmse_px"].add(m.e_rmse_px);
        row["e_rmse_frame_px"].add(m.e_rmse_frame_px);
      }
    }
    json iters = json::array();
    for (std::size_t i = 0; i < per_iter.size(); ++i) {
      json row = {{"iteration", i}};
      for (const auto& [name, moments] : per_iter[i]) row[name] = moments.to_json();
      iters.push_back(row);
    }
    policies[std::string(to_string(kind))] = {{"iterations", iters}};
  }
  doc["policies"] = policies;

  json runs = json::array();
  for (const auto& run : result.runs) {
    json chosen = json::array();
    for (const auto& rec : run.report.iterations) {
      if (!rec.chosen_index) continue;
      chosen.push_back({{"iteration", rec.iteration},
                        {"candidate_index", *rec.chosen_index},
                        {"robot_pose", pose_json(*rec.chosen_pose)}});
    }
    json entry = {{"policy", std::string(to_string(run.policy.kind))},
                  {"seed", run.seed},
                  {"initial_indices", run.report.initial_indices},
                  {"chosen", chosen},
                  {"iterations", run.report.iterations.size()},
                  {"termination", std::string(to_string(run.report.termination))}};
    if (!run.report.failure.empty()) entry["failure"] = run.report.failure;
    runs.push_back(entry);
  }
  doc["runs"] = runs;

  json scatter = {{"pairs", result.scatter.size()}, {"pearson_r", nullptr}};
  if (result.scatter.size() >= 2) {
    std::vector<double> x, y;
    for (const auto& p : result.scatter) {
      x.push_back(p.predicted_ig);
      y.push_back(p.rmse_reduction_px);
    }
    try {
      scatter["pearson_r"] = pearson_correlation(x, y);
    } catch (const CalibrationError&) {
    }
  }
  doc["scatter"] = scatter;
  doc["failures"] = result.failures;
  return doc.dump(2) + "\n";
}

void write_experiment_outputs(const ExperimentResult& result, const std::filesystem::path& out_dir) {
  write_text_file(out_dir / "curves.csv", curves_csv(result));
  write_text_file(out_dir / "scatter.csv", scatter_csv(result));
  write_text_file(out_dir / "summary.json", summary_json(result));
}

DatasetCalibration calibrate_dataset(const Dataset& dataset, const SolverConfig& solver) {
  const CalibrationParams init =
      initialize_from_measurements(dataset.sets, dataset.board, dataset.intrinsics);
  DatasetCalibration out;
  out.solve = optimize(init, dataset.sets, dataset.board, dataset.intrinsics, solver);
  out.info = information_state(out.solve.theta, dataset.sets, dataset.board, dataset.intrinsics);
  std::size_t n_obs = 0;
  for (const auto& z : dataset.sets) n_obs += z.size();
  out.rmse_px = std::sqrt(out.solve.final_cost / static_cast<double>(n_obs));
  return out;
}

CandidateRanking rank_candidates(const Dataset& dataset, const CandidateSet& candidates,
                                 const SolverConfig& solver) {
  CandidateRanking out;
  out.calibration = calibrate_dataset(dataset, solver);
  out.scores = score_candidates(out.calibration.info, out.calibration.solve.theta, candidates,
                                dataset.board, dataset.intrinsics);
  std::vector<bool> scored(candidates.size(), false);
  for (const auto& s : out.scores) scored[s.index] = true;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!scored[i]) out.invisible.push_back(i);
  }
  std::stable_sort(out.scores.begin(), out.scores.end(), [](const auto& a, const auto& b) {
    if (a.information_gain != b.information_gain) return a.information_gain > b.information_gain;
    return a.index < b.index;
  });
  return out;
}

}  // namespace nbvcalib
