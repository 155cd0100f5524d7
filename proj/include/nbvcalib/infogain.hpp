#pragma once

// Parameter uncertainty from the Fisher information J^T J, predicted
// information gain of candidate views, and the greedy next-best-view loop.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nbvcalib/estimator.hpp"
#include "nbvcalib/evaluation.hpp"
#include "nbvcalib/sensing.hpp"

namespace nbvcalib {

/// Information matrices with max/min eigenvalue ratio at or above this are
/// treated as singular.
inline constexpr double kMaxInformationCondition = 1e12;

/// Entropy of a 12-d Gaussian with identity covariance: 6 ln(2 pi e).
double unit_entropy();

struct InfoState {
  Matrix12 information;
  Matrix12 covariance;
  double entropy = 0.0;  // nats
  std::size_t set_count = 0;
  double covariance_scale = 1.0;  // pixel variance; shifts entropy by 6 ln(scale)
};

struct CovarianceEstimate {
  Matrix12 covariance;
  double entropy = 0.0;
};

/// Differential entropy of (information)^-1 * covariance_scale, from the
/// Cholesky log-determinant. Throws kSingularInformation.
double entropy_from_information(const Matrix12& information, double covariance_scale = 1.0);

/// Sigma = (J^T J)^-1 * covariance_scale and its entropy.
CovarianceEstimate fim_covariance(const Eigen::MatrixXd& jacobian, double covariance_scale = 1.0);
CovarianceEstimate fim_covariance_from_information(const Matrix12& information,
                                                   double covariance_scale = 1.0);

InfoState make_info_state(const Matrix12& information, std::size_t set_count,
                          double covariance_scale = 1.0);
InfoState information_state(const CalibrationParams& theta, std::span<const MeasurementSet> sets,
                            const TargetBoard& board, const CameraIntrinsics& K,
                            double covariance_scale = 1.0);

struct CandidateScore {
  std::size_t index = 0;
  double predicted_entropy = 0.0;
  double information_gain = 0.0;
  std::size_t visible_markers = 0;
};

/// Minimum predicted-visible markers for a candidate to be scored.
inline constexpr std::size_t kMinVisibleMarkers = 4;

/// Predicts the entropy after adding a noiseless view from `candidate`
/// linearized at `theta`. Throws kCandidateInvisible.
CandidateScore predict_information_gain(const InfoState& current, const CalibrationParams& theta,
                                        const Pose& candidate, const TargetBoard& board,
                                        const CameraIntrinsics& K, std::size_t index = 0);
CandidateScore predict_information_gain(const CalibrationParams& theta,
                                        std::span<const MeasurementSet> collected,
                                        const Pose& candidate, const TargetBoard& board,
                                        const CameraIntrinsics& K);

/// Scores every candidate not in `excluded`; invisible candidates are left
/// out of the result.
std::vector<CandidateScore> score_candidates(const InfoState& current,
                                             const CalibrationParams& theta,
                                             const CandidateSet& candidates,
                                             const TargetBoard& board, const CameraIntrinsics& K,
                                             std::span<const std::size_t> excluded = {});

struct NbvSelection {
  std::size_t best = 0;
  std::vector<CandidateScore> scores;
};

/// Argmax of information gain, lowest index on ties. Throws
/// kNoEvaluableCandidates.
std::size_t argmax_gain(std::span<const CandidateScore> scores);
NbvSelection select_nbv(const CalibrationParams& theta, const InfoState& current,
                        const CandidateSet& candidates, const TargetBoard& board,
                        const CameraIntrinsics& K, std::span<const std::size_t> excluded = {});
NbvSelection select_nbv(const CalibrationParams& theta, std::span<const MeasurementSet> collected,
                        const CandidateSet& candidates, const TargetBoard& board,
                        const CameraIntrinsics& K);

struct NbvConfig {
  std::size_t initial_sets = 3;
  std::size_t max_additional_views = 5;
  double gain_threshold = 0.0;   // nats; stop when the best gain falls below
  std::size_t candidate_budget = 0;  // candidates scored per iteration, 0 = all
  bool exclude_visited = false;
  double covariance_scale = 1.0;
  SolverConfig solver;

  void validate() const;
};

struct SelectionContext {
  const CandidateSet& candidates;
  const CalibrationParams& theta;
  const InfoState& info;
  std::span<const CandidateScore> scores;
  std::span<const std::size_t> visited;
};

/// Picks the next candidate index.
using ViewSelector = std::function<std::size_t(const SelectionContext&)>;
using MetricsEvaluator = std::function<MetricsRecord(const CalibrationParams&)>;

ViewSelector nbv_selector();
ViewSelector random_selector(std::uint64_t seed);
ViewSelector max_distance_selector(DistanceMode mode = DistanceMode::kMaxMin);
ViewSelector make_selector(const Policy& policy, std::uint64_t seed);

struct IterationRecord {
  std::size_t iteration = 0;  // 0 = after the initial sets
  CalibrationParams theta;
  double entropy = 0.0;
  std::optional<std::size_t> chosen_index;  // view added to reach this state
  std::optional<Pose> chosen_pose;
  double predicted_gain = MetricsRecord::kUnset;  // of the chosen view
  double max_predicted_gain = MetricsRecord::kUnset;  // over candidates scored from this state
  double min_predicted_gain = MetricsRecord::kUnset;
  int solver_iterations = 0;
  double final_cost = 0.0;
  std::optional<MetricsRecord> metrics;
};

enum class Termination { kBudgetExhausted, kGainBelowThreshold, kFailed };
std::string_view to_string(Termination t);

struct ActiveCalibrationReport {
  std::vector<std::size_t> initial_indices;
  std::vector<IterationRecord> iterations;
  std::vector<MeasurementSet> measurements;
  Termination termination = Termination::kBudgetExhausted;
  std::string failure;  // set when termination == kFailed
};

/// Random distinct candidate indices whose robot rotations are not all about
/// one axis. Throws kDegenerateMotion if no such draw is found.
std::vector<std::size_t> draw_initial_views(const CandidateSet& candidates, std::size_t count,
                                            std::uint64_t seed);

/// The active calibration loop: closed-form init, optimize, covariance,
/// score candidates, pick, measure, repeat until the view budget is spent
/// or the best gain drops below the threshold. Errors end the run with
/// termination == kFailed and the records collected so far.
ActiveCalibrationReport run_active_calibration(const NbvConfig& config, MeasurementSource& source,
                                               const CandidateSet& candidates,
                                               std::span<const std::size_t> initial_indices,
                                               const ViewSelector& selector = nbv_selector(),
                                               const MetricsEvaluator& evaluate = {});
ActiveCalibrationReport run_active_calibration(const NbvConfig& config, MeasurementSource& source,
                                               const CandidateSet& candidates, std::uint64_t seed,
                                               const ViewSelector& selector = nbv_selector(),
                                               const MetricsEvaluator& evaluate = {});

}  // namespace nbvcalib
