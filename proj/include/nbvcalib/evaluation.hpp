#pragma once

// Baseline view-selection policies and evaluation metrics.
// Reported units are mm, degrees and pixels; internal math stays in meters
// and radians.

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "nbvcalib/estimator.hpp"
#include "nbvcalib/sensing.hpp"

namespace nbvcalib {

enum class PolicyKind { kNbv, kRandom, kMaxDistance };

std::string_view to_string(PolicyKind kind);
/// Accepts "nbv", "random", "max_distance". Throws kInvalidArgument.
PolicyKind parse_policy(std::string_view name);

/// How "furthest from previous positions" is scored.
enum class DistanceMode { kMaxMin, kMaxSum };

struct Policy {
  PolicyKind kind = PolicyKind::kNbv;
  DistanceMode distance_mode = DistanceMode::kMaxMin;
};

struct PoseError {
  double translation_mm = 0.0;
  double rotation_deg = 0.0;
};

struct MetricsRecord {
  static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

  double e_at_mm = kUnset;  // absolute, needs ground truth
  double e_aR_deg = kUnset;
  double e_rt_mm = kUnset;
  double e_rR_deg = kUnset;
  double e_rmse_px = kUnset;        // per observation
  double e_rmse_frame_px = kUnset;  // literal per-frame normalization
};

/// End-effector position in the base frame.
inline Vector3 effector_position(const Pose& ee_from_base) {
  return ee_from_base.inverse().translation();
}

/// Uniform over indices in [0, candidate_count) not in `visited`.
/// Throws kExhausted when none remain.
std::size_t policy_random(std::size_t candidate_count, std::span<const std::size_t> visited,
                          std::mt19937_64& rng);

/// Unvisited candidate whose position is furthest from the visited positions
/// (max-min by default, max-sum optionally). Ties go to the lowest index.
/// Throws kExhausted when no unvisited candidate remains and
/// kInvalidArgument when `visited_positions` is empty.
std::size_t policy_max_distance(std::span<const Vector3> candidate_positions,
                                std::span<const Vector3> visited_positions,
                                std::span<const std::size_t> visited_indices,
                                DistanceMode mode = DistanceMode::kMaxMin);
std::size_t policy_max_distance(const CandidateSet& candidates,
                                std::span<const std::size_t> visited_indices,
                                DistanceMode mode = DistanceMode::kMaxMin);

/// dT = estimated^-1 * ground_truth; returns (|t(dT)| mm, angle(dT) deg).
PoseError absolute_errors(const Pose& estimated, const Pose& ground_truth);

/// Mean loop-closure discrepancy of base_from_world * world_from_cam_k *
/// cam_from_ee * ee_from_base_k over frames.
PoseError relative_errors(const CalibrationParams& theta, std::span<const Pose> world_from_cam,
                          std::span<const Pose> ee_from_base);
/// Same, with world_from_cam from PnP per frame. Frames where PnP fails are
/// skipped; throws kInsufficientFrames if all fail.
PoseError relative_errors(const CalibrationParams& theta, std::span<const MeasurementSet> frames,
                          const TargetBoard& board, const CameraIntrinsics& K);

struct RmseResult {
  double per_frame = 0.0;        // sqrt(sum_k sum_j |r|^2 / (K - 1))
  double per_observation = 0.0;  // sqrt(sum_k sum_j |r|^2 / N_obs)
};

/// Throws kInsufficientFrames for fewer than 2 frames.
RmseResult reprojection_rmse(const CalibrationParams& theta, std::span<const MeasurementSet> frames,
                             const TargetBoard& board, const CameraIntrinsics& K);

/// Sample Pearson r. Throws kInvalidArgument for mismatched or short inputs
/// and kDegenerateInput for zero variance.
double pearson_correlation(std::span<const double> x, std::span<const double> y);

/// Held-out frames with their PnP camera poses cached; scores a calibration.
class Validator {
 public:
  Validator(std::vector<MeasurementSet> frames, TargetBoard board, CameraIntrinsics K,
            std::optional<CalibrationParams> ground_truth = std::nullopt);

  MetricsRecord operator()(const CalibrationParams& theta) const;
  const std::vector<MeasurementSet>& frames() const { return frames_; }

 private:
  std::vector<MeasurementSet> frames_;
  TargetBoard board_;
  CameraIntrinsics intrinsics_;
  std::optional<CalibrationParams> ground_truth_;
  std::vector<Pose> world_from_cam_;
  std::vector<Pose> ee_from_base_;
};

}  // namespace nbvcalib
