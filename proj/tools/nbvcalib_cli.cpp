// nbvcalib: simulate, calibrate, nbv-rank, make-scene.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nbvcalib/error.hpp"
#include "nbvcalib/experiment.hpp"
#include "nbvcalib/io.hpp"

namespace {

using namespace nbvcalib;
using json = nlohmann::json;

json pose_json(const Pose& pose) {
  const Eigen::Quaterniond q = pose.quaternion();
  const Vector3& t = pose.translation();
  return {{"quaternion_wxyz", {q.w(), q.x(), q.y(), q.z()}}, {"translation_m", {t.x(), t.y(), t.z()}}};
}

int cmd_make_scene(const std::string& out, const std::optional<std::uint64_t>& seed,
                   const std::string& dataset_out, const std::string& candidates_out) {
  ExperimentConfig cfg = default_experiment_config();
  if (seed) cfg.seeds = {*seed};
  const std::string text = serialize_config(cfg);
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_text_file(out, text);
  }
  const Scene& scene = cfg.scene;
  const CandidateSet candidates =
      generate_candidates(cfg.candidates, scene.board, scene.intrinsics, scene.ground_truth);
  if (!candidates_out.empty()) save_candidates(candidates_out, candidates);
  if (!dataset_out.empty()) {
    const std::uint64_t s = cfg.seeds.front();
    Simulator sim(scene, simulator_seed(s));
    Dataset dataset{scene.intrinsics, scene.board, {}};
    for (const auto i : draw_initial_views(candidates, cfg.nbv.initial_sets, initial_view_seed(s))) {
      dataset.sets.push_back(sim.measure(i, candidates.poses[i]));
    }
    save_dataset(dataset_out, dataset);
  }
  return 0;
}

int cmd_simulate(const std::string& config_path, const std::vector<std::uint64_t>& seeds,
                 const std::string& out_dir, const std::vector<std::string>& policies) {
  ExperimentConfig cfg = config_path.empty() ? default_experiment_config() : load_config(config_path);
  if (!seeds.empty()) cfg.seeds = seeds;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (!policies.empty()) {
    const DistanceMode mode = [&] {
      for (const auto& p : cfg.policies) {
        if (p.kind == PolicyKind::kMaxDistance) return p.distance_mode;
      }
      return DistanceMode::kMaxMin;
    }();
    cfg.policies.clear();
    for (const auto& name : policies) cfg.policies.push_back({parse_policy(name), mode});
  }
  const ExperimentResult result = run_experiment(cfg);
  write_experiment_outputs(result, cfg.out_dir);
  std::cout << "wrote " << result.runs.size() << " runs to " << cfg.out_dir.string() << "\n";
  for (const auto& f : result.failures) std::cerr << "run failed: " << f << "\n";
  return result.failures.empty() ? 0 : 2;
}

int cmd_calibrate(const std::string& dataset_path) {
  const Dataset dataset = load_dataset(dataset_path);
  const DatasetCalibration cal = calibrate_dataset(dataset);
  const json doc = {{"cam_from_ee", pose_json(cal.solve.theta.cam_from_ee)},
                    {"base_from_world", pose_json(cal.solve.theta.base_from_world)},
                    {"entropy_nats", cal.info.entropy},
                    {"final_cost_px2", cal.solve.final_cost},
                    {"rmse_px", cal.rmse_px},
                    {"iterations", cal.solve.iterations},
                    {"convergence", std::string(to_string(cal.solve.reason))},
                    {"sets", dataset.sets.size()}};
  std::cout << doc.dump(2) << "\n";
  return 0;
}

int cmd_nbv_rank(const std::string& dataset_path, const std::string& candidates_path) {
  const Dataset dataset = load_dataset(dataset_path);
  const CandidateSet candidates = load_candidates(candidates_path);
  const CandidateRanking ranking = rank_candidates(dataset, candidates);
  const std::string before = format_double(ranking.calibration.info.entropy);
  std::cout << "rank,candidate_index,ig_nats,entropy_before_nats,entropy_after_nats,visible_markers\n";
  for (std::size_t r = 0; r < ranking.scores.size(); ++r) {
    const auto& s = ranking.scores[r];
    std::cout << r + 1 << ',' << s.index << ',' << format_double(s.information_gain) << ',' << before
              << ',' << format_double(s.predicted_entropy) << ',' << s.visible_markers << '\n';
  }
  for (const auto i : ranking.invisible) {
    std::cerr << "candidate " << i << " not scored: board not visible\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active eye-in-hand calibration with next-best-view selection"};
  app.require_subcommand(1);

  std::string scene_out;
  std::string scene_dataset_out;
  std::string scene_candidates_out;
  std::optional<std::uint64_t> scene_seed;
  auto* make_scene = app.add_subcommand("make-scene", "Write a default experiment config");
  make_scene->add_option("--out", scene_out, "Config path (stdout if omitted)");
  make_scene->add_option("--seed", scene_seed, "Single seed for the config and sample dataset");
  make_scene->add_option("--dataset-out", scene_dataset_out,
                         "Also write the initial measurement sets as a dataset");
  make_scene->add_option("--candidates-out", scene_candidates_out,
                         "Also write the candidate robot poses");

  std::string sim_config;
  std::vector<std::uint64_t> sim_seeds;
  std::string sim_out_dir;
  std::vector<std::string> sim_policies;
  auto* simulate = app.add_subcommand("simulate", "Run the policy benchmark");
  simulate->add_option("--config", sim_config, "Experiment config (defaults if omitted)")
      ->check(CLI::ExistingFile);
  simulate->add_option("--seed", sim_seeds, "Seed(s), overriding the config");
  simulate->add_option("--out-dir", sim_out_dir, "Output directory, overriding the config");
  simulate->add_option("--policy", sim_policies, "nbv, random or max_distance; repeatable")
      ->check(CLI::IsMember({"nbv", "random", "max_distance"}));

  std::string cal_dataset;
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate from a dataset file");
  calibrate->add_option("--dataset", cal_dataset, "Dataset file")->required()->check(CLI::ExistingFile);

  std::string rank_dataset;
  std::string rank_candidates_path;
  auto* nbv_rank = app.add_subcommand("nbv-rank", "Rank candidate views by information gain");
  nbv_rank->add_option("--dataset", rank_dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  nbv_rank->add_option("--candidates", rank_candidates_path, "Candidate file")
      ->required()
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*make_scene) {
      return cmd_make_scene(scene_out, scene_seed, scene_dataset_out, scene_candidates_out);
    }
    if (*simulate) return cmd_simulate(sim_config, sim_seeds, sim_out_dir, sim_policies);
    if (*calibrate) return cmd_calibrate(cal_dataset);
    if (*nbv_rank) return cmd_nbv_rank(rank_dataset, rank_candidates_path);
  } catch (const CalibrationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
