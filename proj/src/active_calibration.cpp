#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "nbvcalib/error.hpp"
#include "nbvcalib/infogain.hpp"

namespace nbvcalib {

namespace {

// Rotation axes of the robot motions relative to the first pose must span
// more than one direction.
bool rotations_non_parallel(const CandidateSet& candidates, std::span<const std::size_t> picks) {
  constexpr double kMinAngle = 2.0 * std::numbers::pi / 180.0;
  constexpr double kMinAxisSine = 0.17;  // ~10 degrees between axes
  std::vector<Vector3> axes;
  const Matrix3& r0 = candidates.poses[picks[0]].rotation();
  for (std::size_t k = 1; k < picks.size(); ++k) {
    const Vector3 phi = log_so3(candidates.poses[picks[k]].rotation() * r0.transpose());
    if (phi.norm() > kMinAngle) axes.push_back(phi.normalized());
  }
  for (std::size_t i = 0; i < axes.size(); ++i) {
    for (std::size_t j = i + 1; j < axes.size(); ++j) {
      if (axes[i].cross(axes[j]).norm() > kMinAxisSine) return true;
    }
  }
  return false;
}

std::vector<std::size_t> scoring_exclusions(const NbvConfig& config, std::size_t candidate_count,
                                            std::span<const std::size_t> visited) {
  std::vector<std::size_t> excluded;
  if (config.exclude_visited) excluded.assign(visited.begin(), visited.end());
  if (config.candidate_budget > 0 && config.candidate_budget < candidate_count) {
    // Evenly strided subset of the candidate list.
    std::vector<bool> keep(candidate_count, false);
    for (std::size_t i = 0; i < config.candidate_budget; ++i) {
      keep[i * candidate_count / config.candidate_budget] = true;
    }
    for (std::size_t i = 0; i < candidate_count; ++i) {
      if (!keep[i]) excluded.push_back(i);
    }
  }
  return excluded;
}

}  // namespace

void NbvConfig::validate() const {
  if (initial_sets < 3) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "at least 3 initial sets are required");
  }
  if (!(gain_threshold >= 0.0)) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "gain threshold must be >= 0");
  }
  if (!(covariance_scale > 0.0)) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "covariance scale must be positive");
  }
  solver.validate();
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::kBudgetExhausted: return "budget_exhausted";
    case Termination::kGainBelowThreshold: return "gain_below_threshold";
    case Termination::kFailed: return "failed";
  }
  return "unknown";
}

ViewSelector nbv_selector() {
  return [](const SelectionContext& ctx) { return argmax_gain(ctx.scores); };
}

ViewSelector random_selector(std::uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [rng](const SelectionContext& ctx) {
    return policy_random(ctx.candidates.size(), ctx.visited, *rng);
  };
}

ViewSelector max_distance_selector(DistanceMode mode) {
  return [mode](const SelectionContext& ctx) {
    return policy_max_distance(ctx.candidates, ctx.visited, mode);
  };
}

ViewSelector make_selector(const Policy& policy, std::uint64_t seed) {
  switch (policy.kind) {
    case PolicyKind::kNbv: return nbv_selector();
    case PolicyKind::kRandom: return random_selector(seed);
    case PolicyKind::kMaxDistance: return max_distance_selector(policy.distance_mode);
  }
  throw CalibrationError(ErrorCode::kInvalidArgument, "unknown policy");
}

std::vector<std::size_t> draw_initial_views(const CandidateSet& candidates, std::size_t count,
                                            std::uint64_t seed) {
  if (count < 3 || candidates.size() < count) {
    throw CalibrationError(ErrorCode::kDegenerateMotion,
                           "need at least 3 distinct initial views from the candidates");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(candidates.size());
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
      std::swap(order[i], order[pick(rng)]);
    }
    std::vector<std::size_t> picks(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
    if (rotations_non_parallel(candidates, picks)) return picks;
  }
  throw CalibrationError(ErrorCode::kDegenerateMotion,
                         "no initial draw with non-parallel rotation axes");
}

ActiveCalibrationReport run_active_calibration(const NbvConfig& config, MeasurementSource& source,
                                               const CandidateSet& candidates, std::uint64_t seed,
                                               const ViewSelector& selector,
                                               const MetricsEvaluator& evaluate) {
  const std::vector<std::size_t> initial = draw_initial_views(candidates, config.initial_sets, seed);
  return run_active_calibration(config, source, candidates, initial, selector, evaluate);
}

ActiveCalibrationReport run_active_calibration(const NbvConfig& config, MeasurementSource& source,
                                               const CandidateSet& candidates,
                                               std::span<const std::size_t> initial_indices,
                                               const ViewSelector& selector,
                                               const MetricsEvaluator& evaluate) {
  config.validate();
  ActiveCalibrationReport report;
  report.initial_indices.assign(initial_indices.begin(), initial_indices.end());
  const TargetBoard& board = source.board();
  const CameraIntrinsics& K = source.intrinsics();

  std::vector<std::size_t> visited;
  IterationRecord pending;  // carries the chosen view into the next record
  try {
    for (const auto i : initial_indices) {
      report.measurements.push_back(source.measure(i, candidates.poses.at(i)));
      visited.push_back(i);
    }
    CalibrationParams theta = initialize_from_measurements(report.measurements, board, K);

    for (std::size_t iteration = 0;; ++iteration) {
      const SolveReport solve = optimize(theta, report.measurements, board, K, config.solver);
      theta = solve.theta;
      const InfoState info =
          information_state(theta, report.measurements, board, K, config.covariance_scale);

      IterationRecord& rec = report.iterations.emplace_back(pending);
      rec.iteration = iteration;
      rec.theta = theta;
      rec.entropy = info.entropy;
      rec.solver_iterations = solve.iterations;
      rec.final_cost = solve.final_cost;
      if (evaluate) rec.metrics = evaluate(theta);

      if (iteration >= config.max_additional_views) {
        report.termination = Termination::kBudgetExhausted;
        break;
      }

      const std::vector<std::size_t> excluded =
          scoring_exclusions(config, candidates.size(), visited);
      const std::vector<CandidateScore> scores =
          score_candidates(info, theta, candidates, board, K, excluded);
      if (scores.empty()) {
        throw CalibrationError(ErrorCode::kNoEvaluableCandidates, "no candidate could be scored");
      }
      const auto [worst, best] =
          std::minmax_element(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
            return a.information_gain < b.information_gain;
          });
      rec.max_predicted_gain = best->information_gain;
      rec.min_predicted_gain = worst->information_gain;
      if (rec.max_predicted_gain < config.gain_threshold) {
        report.termination = Termination::kGainBelowThreshold;
        break;
      }

      const SelectionContext ctx{candidates, theta, info, scores, visited};
      const std::size_t chosen = selector(ctx);
      pending = IterationRecord{};
      pending.chosen_index = chosen;
      pending.chosen_pose = candidates.poses.at(chosen);
      const auto hit = std::find_if(scores.begin(), scores.end(),
                                    [chosen](const auto& s) { return s.index == chosen; });
      if (hit != scores.end()) {
        pending.predicted_gain = hit->information_gain;
      } else {
        try {
          pending.predicted_gain =
              predict_information_gain(info, theta, candidates.poses[chosen], board, K, chosen)
                  .information_gain;
        } catch (const CalibrationError&) {
          // left unset for views the model predicts as invisible
        }
      }

      report.measurements.push_back(source.measure(chosen, candidates.poses[chosen]));
      visited.push_back(chosen);
    }
  } catch (const CalibrationError& e) {
    report.termination = Termination::kFailed;
    report.failure = e.what();
  }
  return report;
}

}  // namespace nbvcalib
