#pragma once

// JSON documents for experiment configs, measurement datasets and candidate
// lists. Every document carries "format" and "version" tags. Rotations are
// stored as unit quaternions (w, x, y, z), translations in meters.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "nbvcalib/evaluation.hpp"
#include "nbvcalib/infogain.hpp"
#include "nbvcalib/sensing.hpp"

namespace nbvcalib {

inline constexpr int kFormatVersion = 1;

struct ExperimentConfig {
  Scene scene = default_scene();
  CandidateGeometry candidates;
  NbvConfig nbv;
  std::vector<Policy> policies{{PolicyKind::kNbv}, {PolicyKind::kRandom}, {PolicyKind::kMaxDistance}};
  std::vector<std::uint64_t> seeds;
  std::size_t validation_size = 10;
  bool scatter = true;  // emit predicted-gain vs. realized-RMSE pairs for nbv
  std::filesystem::path out_dir = "out";

  void validate() const;
};

/// Default scene, 5 added views, seeds 0..19, all three policies.
ExperimentConfig default_experiment_config();

struct Dataset {
  CameraIntrinsics intrinsics;
  TargetBoard board;
  std::vector<MeasurementSet> sets;
};

// Parse errors throw kParseError (with the offending field), unsupported
// versions kVersionMismatch, and broken invariants (non-unit quaternion,
// unknown marker) kInvariantViolation.
ExperimentConfig parse_config(std::string_view text);
std::string serialize_config(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& config);

Dataset parse_dataset(std::string_view text);
std::string serialize_dataset(const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);

CandidateSet parse_candidates(std::string_view text);
std::string serialize_candidates(const CandidateSet& candidates);
CandidateSet load_candidates(const std::filesystem::path& path);
void save_candidates(const std::filesystem::path& path, const CandidateSet& candidates);

/// Shortest decimal text that parses back to the same double; "" for NaN.
std::string format_double(double value);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace nbvcalib
