#include "nbvcalib/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "nbvcalib/error.hpp"

namespace nbvcalib {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

bool contains(std::span<const std::size_t> xs, std::size_t x) {
  return std::find(xs.begin(), xs.end(), x) != xs.end();
}

PoseError pose_magnitude(const Pose& d) {
  return {1000.0 * d.translation().norm(), kRadToDeg * rotation_angle(d)};
}

}  // namespace

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kNbv: return "nbv";
    case PolicyKind::kRandom: return "random";
    case PolicyKind::kMaxDistance: return "max_distance";
  }
  return "unknown";
}

PolicyKind parse_policy(std::string_view name) {
  if (name == "nbv") return PolicyKind::kNbv;
  if (name == "random") return PolicyKind::kRandom;
  if (name == "max_distance") return PolicyKind::kMaxDistance;
  throw CalibrationError(ErrorCode::kInvalidArgument, "unknown policy '" + std::string(name) + "'");
}

std::size_t policy_random(std::size_t candidate_count, std::span<const std::size_t> visited,
                          std::mt19937_64& rng) {
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < candidate_count; ++i) {
    if (!contains(visited, i)) open.push_back(i);
  }
  if (open.empty()) {
    throw CalibrationError(ErrorCode::kExhausted, "every candidate has been visited");
  }
  std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
  return open[pick(rng)];
}

std::size_t policy_max_distance(std::span<const Vector3> candidate_positions,
                                std::span<const Vector3> visited_positions,
                                std::span<const std::size_t> visited_indices, DistanceMode mode) {
  if (visited_positions.empty()) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "max-distance needs a visited position");
  }
  std::optional<std::size_t> best;
  double best_score = -1.0;
  for (std::size_t i = 0; i < candidate_positions.size(); ++i) {
    if (contains(visited_indices, i)) continue;
    double score = mode == DistanceMode::kMaxMin ? std::numeric_limits<double>::infinity() : 0.0;
    for (const auto& v : visited_positions) {
      const double d = (candidate_positions[i] - v).norm();
      score = mode == DistanceMode::kMaxMin ? std::min(score, d) : score + d;
    }
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  if (!best) {
    throw CalibrationError(ErrorCode::kExhausted, "every candidate has been visited");
  }
  return *best;
}

std::size_t policy_max_distance(const CandidateSet& candidates,
                                std::span<const std::size_t> visited_indices, DistanceMode mode) {
  std::vector<Vector3> positions;
  positions.reserve(candidates.size());
  for (const auto& p : candidates.poses) positions.push_back(effector_position(p));
  std::vector<Vector3> visited;
  for (const auto i : visited_indices) visited.push_back(positions.at(i));
  return policy_max_distance(positions, visited, visited_indices, mode);
}

PoseError absolute_errors(const Pose& estimated, const Pose& ground_truth) {
  return pose_magnitude(estimated.inverse() * ground_truth);
}

PoseError relative_errors(const CalibrationParams& theta, std::span<const Pose> world_from_cam,
                          std::span<const Pose> ee_from_base) {
  if (world_from_cam.size() != ee_from_base.size() || world_from_cam.empty()) {
    throw CalibrationError(ErrorCode::kInsufficientFrames,
                           "relative errors need matching, non-empty pose lists");
  }
  PoseError sum;
  for (std::size_t k = 0; k < world_from_cam.size(); ++k) {
    const Pose loop =
        theta.base_from_world * world_from_cam[k] * theta.cam_from_ee * ee_from_base[k];
    const PoseError e = pose_magnitude(loop);
    sum.translation_mm += e.translation_mm;
    sum.rotation_deg += e.rotation_deg;
  }
  const auto n = static_cast<double>(world_from_cam.size());
  return {sum.translation_mm / n, sum.rotation_deg / n};
}

PoseError relative_errors(const CalibrationParams& theta, std::span<const MeasurementSet> frames,
                          const TargetBoard& board, const CameraIntrinsics& K) {
  std::vector<Pose> cams;
  std::vector<Pose> robots;
  for (const auto& z : frames) {
    try {
      cams.push_back(solve_pnp(board, z.observations(), K));
      robots.push_back(z.ee_from_base());
    } catch (const CalibrationError&) {
      // frame skipped
    }
  }
  if (cams.empty()) {
    throw CalibrationError(ErrorCode::kInsufficientFrames, "PnP failed on every frame");
  }
  return relative_errors(theta, cams, robots);
}

RmseResult reprojection_rmse(const CalibrationParams& theta, std::span<const MeasurementSet> frames,
                             const TargetBoard& board, const CameraIntrinsics& K) {
  if (frames.size() < 2) {
    throw CalibrationError(ErrorCode::kInsufficientFrames,
                           "reprojection RMSE needs at least 2 frames");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& z : frames) {
    sum += residuals(theta, z, board, K).values.squaredNorm();
    count += z.size();
  }
  return {std::sqrt(sum / static_cast<double>(frames.size() - 1)),
          std::sqrt(sum / static_cast<double>(count))};
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) {
    throw CalibrationError(ErrorCode::kInvalidArgument,
                           "Pearson correlation needs two equal-length samples of size >= 3");
  }
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    throw CalibrationError(ErrorCode::kDegenerateInput, "input has zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Validator::Validator(std::vector<MeasurementSet> frames, TargetBoard board, CameraIntrinsics K,
                     std::optional<CalibrationParams> ground_truth)
    : frames_(std::move(frames)),
      board_(std::move(board)),
      intrinsics_(K),
      ground_truth_(std::move(ground_truth)) {
  if (frames_.size() < 2) {
    throw CalibrationError(ErrorCode::kInsufficientFrames, "validation needs at least 2 frames");
  }
  for (const auto& z : frames_) {
    try {
      world_from_cam_.push_back(solve_pnp(board_, z.observations(), intrinsics_));
      ee_from_base_.push_back(z.ee_from_base());
    } catch (const CalibrationError&) {
      // frame skipped for the relative metrics
    }
  }
  if (world_from_cam_.empty()) {
    throw CalibrationError(ErrorCode::kInsufficientFrames, "PnP failed on every validation frame");
  }
}

MetricsRecord Validator::operator()(const CalibrationParams& theta) const {
  MetricsRecord m;
  if (ground_truth_) {
    const PoseError a = absolute_errors(theta.cam_from_ee, ground_truth_->cam_from_ee);
    m.e_at_mm = a.translation_mm;
    m.e_aR_deg = a.rotation_deg;
  }
  const PoseError r = relative_errors(theta, world_from_cam_, ee_from_base_);
  m.e_rt_mm = r.translation_mm;
  m.e_rR_deg = r.rotation_deg;
  const RmseResult rmse = reprojection_rmse(theta, frames_, board_, intrinsics_);
  m.e_rmse_px = rmse.per_observation;
  m.e_rmse_frame_px = rmse.per_frame;
  return m;
}

}  // namespace nbvcalib
