#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "nbvcalib/error.hpp"
#include "nbvcalib/experiment.hpp"

using namespace nbvcalib;

namespace {

namespace fs = std::filesystem;

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

ExperimentConfig small_config() {
  ExperimentConfig c = default_experiment_config();
  c.seeds = {0, 1};
  return c;
}

std::string run(const std::string& args, const fs::path& stdout_path) {
  const std::string cmd = std::string(NBVCALIB_CLI) + " " + args + " > " + stdout_path.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  std::ifstream in(stdout_path);
  std::stringstream ss;
  ss << in.rdbuf();
  return std::to_string(WEXITSTATUS(rc)) + "\n" + ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nbvcalib_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Experiment, RowCountsAndIterationContiguity) {
  const ExperimentResult r = run_experiment(small_config());
  EXPECT_TRUE(r.failures.empty());
  const std::string csv = curves_csv(r);
  EXPECT_EQ(count_lines(csv), 1 + 3 * 2 * 6u);
  for (const auto& run : r.runs) {
    for (std::size_t i = 0; i < run.report.iterations.size(); ++i) {
      EXPECT_EQ(run.report.iterations[i].iteration, i);
      if (i > 0) EXPECT_LE(run.report.iterations[i].entropy, run.report.iterations[i - 1].entropy + 1e-9);
    }
  }
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "policy,seed,iteration,entropy_nats,predicted_ig_nats,e_at_mm,e_aR_deg,e_rt_mm,e_rR_deg,e_rmse_px,"
            "candidate_index,e_rmse_frame_px");
}

TEST(Experiment, PoliciesShareInitialViews) {
  const ExperimentResult r = run_experiment(small_config());
  for (const auto& a : r.runs) {
    for (const auto& b : r.runs) {
      if (a.seed == b.seed) {
        EXPECT_EQ(a.report.initial_indices, b.report.initial_indices);
        EXPECT_EQ(a.report.iterations[0].entropy, b.report.iterations[0].entropy);
      }
    }
  }
}

TEST(Experiment, Deterministic) {
  const ExperimentConfig c = small_config();
  const ExperimentResult a = run_experiment(c);
  const ExperimentResult b = run_experiment(c);
  EXPECT_EQ(curves_csv(a), curves_csv(b));
  EXPECT_EQ(scatter_csv(a), scatter_csv(b));
  EXPECT_EQ(summary_json(a), summary_json(b));
}

TEST(Experiment, ScatterOnlyForNbv) {
  ExperimentConfig c = small_config();
  c.policies = {{PolicyKind::kRandom}};
  EXPECT_TRUE(run_experiment(c).scatter.empty());
  c.policies = {{PolicyKind::kNbv}};
  EXPECT_GE(run_experiment(c).scatter.size(), 40u);
}

TEST(Experiment, RankMatchesLibraryCall) {
  const Scene s = default_scene();
  const CandidateSet all = generate_candidates(CandidateGeometry{}, s.board, s.intrinsics, s.ground_truth);
  Dataset d{s.intrinsics, s.board, {}};
  for (std::size_t i : {2u, 19u, 35u}) d.sets.push_back(simulate_measurement(s, all.poses[i], i));
  const CandidateRanking r = rank_candidates(d, all);
  ASSERT_EQ(r.scores.size(), all.size());
  for (std::size_t i = 1; i < r.scores.size(); ++i) {
    EXPECT_GE(r.scores[i - 1].information_gain, r.scores[i].information_gain);
    EXPECT_GE(r.scores[i].information_gain, 0.0);
  }
  const CandidateSet one{{all.poses[7]}};
  const CandidateRanking single = rank_candidates(d, one);
  ASSERT_EQ(single.scores.size(), 1u);
  const CandidateScore direct =
      predict_information_gain(single.calibration.solve.theta, d.sets, all.poses[7], s.board, s.intrinsics);
  EXPECT_EQ(single.scores[0].information_gain, direct.information_gain);
}

TEST(Cli, MakeSceneThenRankAndCalibrate) {
  const fs::path dir = scratch("rank");
  const std::string out =
      run("make-scene --out " + (dir / "cfg.json").string() + " --dataset-out " + (dir / "data.json").string() +
              " --candidates-out " + (dir / "cand.json").string(),
          dir / "log.txt");
  ASSERT_EQ(out.substr(0, 2), "0\n") << out;
  EXPECT_NO_THROW(load_config(dir / "cfg.json"));

  const std::string ranked =
      run("nbv-rank --dataset " + (dir / "data.json").string() + " --candidates " + (dir / "cand.json").string(),
          dir / "rank.txt");
  ASSERT_EQ(ranked.substr(0, 2), "0\n") << ranked;
  EXPECT_NE(ranked.find("rank,candidate_index,ig_nats"), std::string::npos);
  EXPECT_EQ(count_lines(ranked), 2 + 48u);

  const std::string cal = run("calibrate --dataset " + (dir / "data.json").string(), dir / "cal.txt");
  ASSERT_EQ(cal.substr(0, 2), "0\n") << cal;
  EXPECT_NE(cal.find("entropy_nats"), std::string::npos);
}

TEST(Cli, SimulateWritesReports) {
  const fs::path dir = scratch("sim");
  const std::string out =
      run("simulate --seed 4 --policy random --out-dir " + (dir / "o").string(), dir / "log.txt");
  ASSERT_EQ(out.substr(0, 2), "0\n") << out;
  for (const char* f : {"curves.csv", "scatter.csv", "summary.json"}) EXPECT_TRUE(fs::exists(dir / "o" / f)) << f;
}

TEST(Cli, ErrorsExitNonzero) {
  const fs::path dir = scratch("err");
  std::ofstream(dir / "bad.json") << R"({"format":"nbvcalib-dataset","version":2})";
  const std::string out = run("calibrate --dataset " + (dir / "bad.json").string(), dir / "log.txt");
  EXPECT_EQ(out.substr(0, 2), "1\n") << out;
  EXPECT_NE(out.find("VersionMismatch"), std::string::npos) << out;
  EXPECT_NE(run("frobnicate", dir / "log2.txt").substr(0, 2), "0\n");
}

TEST(Cli, SingularDatasetExitsNonzero) {
  const fs::path dir = scratch("singular");
  Scene s = default_scene();
  s.noise = NoiseModel::none();
  const CandidateSet all = generate_candidates(CandidateGeometry{}, s.board, s.intrinsics, s.ground_truth);
  Dataset d{s.intrinsics, s.board, {}};
  for (int k = 0; k < 3; ++k) d.sets.push_back(simulate_measurement(s, all.poses[0], k));  // one viewpoint
  save_dataset(dir / "data.json", d);
  save_candidates(dir / "cand.json", all);
  const std::string out = run("nbv-rank --dataset " + (dir / "data.json").string() + " --candidates " +
                                  (dir / "cand.json").string(),
                              dir / "log.txt");
  EXPECT_NE(out.substr(0, 2), "0\n") << out;
}
