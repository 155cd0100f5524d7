#pragma once

// Seeded multi-policy benchmark runs and their CSV/JSON reports, plus the
// single-dataset calibrate and rank queries behind the command-line tool.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nbvcalib/infogain.hpp"
#include "nbvcalib/io.hpp"

namespace nbvcalib {

struct RunResult {
  Policy policy;
  std::uint64_t seed = 0;
  ActiveCalibrationReport report;
};

/// Predicted gain of one candidate at iteration 0 against the validation
/// RMSE reduction observed after actually adding it and re-optimizing.
struct ScatterPoint {
  std::uint64_t seed = 0;
  std::size_t candidate_index = 0;
  double predicted_ig = 0.0;      // nats
  double rmse_reduction_px = 0.0;  // before minus after
};

struct ExperimentResult {
  std::vector<RunResult> runs;  // config policy order, then config seed order
  std::vector<ScatterPoint> scatter;
  CandidateSet candidates;
  std::vector<std::string> failures;  // "policy=..., seed=..., iteration=...: what"
};

// Sub-seeds derived from each run seed.
inline std::uint64_t simulator_seed(std::uint64_t seed) { return mix_seed(seed, 1); }
inline std::uint64_t validation_pose_seed(std::uint64_t seed) { return mix_seed(seed, 2); }
inline std::uint64_t validation_noise_seed(std::uint64_t seed, std::size_t k) {
  return mix_seed(seed, 3, k);
}
inline std::uint64_t initial_view_seed(std::uint64_t seed) { return mix_seed(seed, 4); }
inline std::uint64_t policy_seed(std::uint64_t seed) { return mix_seed(seed, 5); }

/// Held-out frames from cap poses off the candidate grid.
Validator make_validator(const Scene& scene, const CandidateGeometry& geometry,
                         std::size_t size, std::uint64_t seed);

/// Runs every (policy, seed) pair. Failed runs keep their partial records
/// and are listed in `failures`.
ExperimentResult run_experiment(const ExperimentConfig& config);

std::string curves_csv(const ExperimentResult& result);
std::string scatter_csv(const ExperimentResult& result);
std::string summary_json(const ExperimentResult& result);

/// Writes curves.csv, scatter.csv and summary.json under `out_dir`.
void write_experiment_outputs(const ExperimentResult& result, const std::filesystem::path& out_dir);

struct DatasetCalibration {
  SolveReport solve;
  InfoState info;
  double rmse_px = 0.0;  // per observation, on the dataset itself
};

/// Closed-form initialization followed by optimization.
DatasetCalibration calibrate_dataset(const Dataset& dataset, const SolverConfig& solver = {});

struct CandidateRanking {
  DatasetCalibration calibration;
  std::vector<CandidateScore> scores;  // gain descending, then index
  std::vector<std::size_t> invisible;  // candidates that could not be scored
};

CandidateRanking rank_candidates(const Dataset& dataset, const CandidateSet& candidates,
                                 const SolverConfig& solver = {});

}  // namespace nbvcalib
