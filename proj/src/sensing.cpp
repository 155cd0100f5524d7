#include "nbvcalib/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "nbvcalib/error.hpp"

namespace nbvcalib {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) throw CalibrationError(code, what);
}

}  // namespace

void CameraIntrinsics::validate() const {
  require(fx > 0.0 && fy > 0.0, ErrorCode::kInvalidArgument, "focal lengths must be positive");
  require(width > 0 && height > 0, ErrorCode::kInvalidArgument, "image size must be positive");
  require(cx > 0.0 && cx < width && cy > 0.0 && cy < height, ErrorCode::kInvalidArgument,
          "principal point must lie inside the image");
}

const Vector3& TargetBoard::point(int id) const {
  if (!has_marker(id)) {
    throw CalibrationError(ErrorCode::kUnknownMarker, "marker id " + std::to_string(id));
  }
  return points[static_cast<std::size_t>(id)];
}

MeasurementSet::MeasurementSet(const Pose& ee_from_base, std::vector<PixelObservation> observations)
    : ee_from_base_(ee_from_base), observations_(std::move(observations)) {
  require(!observations_.empty(), ErrorCode::kInvalidArgument, "measurement set has no observations");
  std::sort(observations_.begin(), observations_.end(),
            [](const auto& a, const auto& b) { return a.marker_id < b.marker_id; });
  for (std::size_t i = 1; i < observations_.size(); ++i) {
    require(observations_[i].marker_id != observations_[i - 1].marker_id,
            ErrorCode::kInvalidArgument,
            "duplicate observation of marker " + std::to_string(observations_[i].marker_id));
  }
}

void NoiseModel::validate() const {
  require(pixel_sigma >= 0.0 && robot_rot_sigma >= 0.0 && robot_trans_sigma >= 0.0,
          ErrorCode::kInvalidArgument, "noise sigmas must be non-negative");
}

void CandidateGeometry::validate() const {
  require(radius_min > 0.0 && radius_max >= radius_min, ErrorCode::kInvalidArgument,
          "radius range must satisfy 0 < min <= max");
  require(radius_count > 0 && azimuth_count > 0 && elevation_count > 0,
          ErrorCode::kInvalidArgument, "grid counts must be positive");
  require(elevation_min_deg > 0.0 && elevation_max_deg <= 90.0 &&
              elevation_min_deg <= elevation_max_deg,
          ErrorCode::kInvalidArgument, "elevation range must lie in (0, 90] degrees");
  require(image_margin_px >= 0.0, ErrorCode::kInvalidArgument, "image margin must be >= 0");
}

Pose robot_pose_for_camera(const CalibrationParams& theta, const Pose& world_from_cam) {
  return theta.cam_from_ee.inverse() * world_from_cam.inverse() * theta.base_from_world.inverse();
}

Scene default_scene() {
  Scene scene;
  scene.board = make_board(4, 4, 0.03);
  const Matrix3 mount = (Eigen::AngleAxisd(90.0 * kDegToRad, Vector3::UnitZ()) *
                         Eigen::AngleAxisd(-3.0 * kDegToRad, Vector3::UnitY()) *
                         Eigen::AngleAxisd(2.0 * kDegToRad, Vector3::UnitX()))
                            .toRotationMatrix();
  const Pose ee_from_cam(mount, Vector3(0.04, -0.02, 0.08));
  scene.ground_truth.cam_from_ee = ee_from_cam.inverse();
  scene.ground_truth.base_from_world =
      Pose(Eigen::AngleAxisd(25.0 * kDegToRad, Vector3::UnitZ()).toRotationMatrix(),
           Vector3(0.55, 0.10, 0.02));
  return scene;
}

Vector2 project(const CameraIntrinsics& K, const Vector3& p) {
  if (p.z() <= kMinDepth) {
    throw CalibrationError(ErrorCode::kBehindCamera, "point depth " + std::to_string(p.z()));
  }
  return {K.fx * p.x() / p.z() + K.cx, K.fy * p.y() / p.z() + K.cy};
}

ProjectionJacobian project_jacobian(const CameraIntrinsics& K, const Vector3& p) {
  if (p.z() <= kMinDepth) {
    throw CalibrationError(ErrorCode::kBehindCamera, "point depth " + std::to_string(p.z()));
  }
  const double iz = 1.0 / p.z();
  const double iz2 = iz * iz;
  ProjectionJacobian j;
  // clang-format off
  j << K.fx * iz, 0.0,       -K.fx * p.x() * iz2,
       0.0,       K.fy * iz, -K.fy * p.y() * iz2;
  // clang-format on
  return j;
}

TargetBoard make_board(int rows, int cols, double spacing) {
  require(rows >= 2 && cols >= 2 && spacing > 0.0, ErrorCode::kBadDimensions,
          "board needs rows, cols >= 2 and positive spacing");
  TargetBoard board;
  board.rows = rows;
  board.cols = cols;
  board.spacing = spacing;
  board.points.reserve(static_cast<std::size_t>(rows * cols));
  const double x0 = 0.5 * (rows - 1) * spacing;
  const double y0 = 0.5 * (cols - 1) * spacing;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      board.points.emplace_back(i * spacing - x0, j * spacing - y0, 0.0);
    }
  }
  return board;
}

Pose look_at_origin(double radius, double azimuth, double elevation, double roll) {
  const double ce = std::cos(elevation);
  const Vector3 position = radius * Vector3(ce * std::cos(azimuth), ce * std::sin(azimuth),
                                            std::sin(elevation));
  const Vector3 z = -position.normalized();
  // Tangent to the azimuth circle: always orthogonal to z, defined at the zenith too.
  Vector3 x(-std::sin(azimuth), std::cos(azimuth), 0.0);
  if (roll != 0.0) {
    x = Eigen::AngleAxisd(roll, z) * x;
  }
  const Vector3 y = z.cross(x);
  Matrix3 R;
  R.col(0) = x;
  R.col(1) = y;
  R.col(2) = z;
  return {R, position};
}

bool board_visible(const TargetBoard& board, const CameraIntrinsics& K, const Pose& cam_from_world,
                   double margin) {
  for (const auto& p : board.points) {
    const Vector3 pc = cam_from_world.act(p);
    if (pc.z() <= kMinDepth) return false;
    if (!K.contains(project(K, pc), margin)) return false;
  }
  return true;
}

CandidateSet generate_candidates(const CandidateGeometry& g, const TargetBoard& board,
                                 const CameraIntrinsics& K, const CalibrationParams& gt) {
  g.validate();
  CandidateSet out;
  const auto lerp = [](double lo, double hi, int i, int n) {
    return n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  };
  for (int ri = 0; ri < g.radius_count; ++ri) {
    const double radius = lerp(g.radius_min, g.radius_max, ri, g.radius_count);
    for (int ei = 0; ei < g.elevation_count; ++ei) {
      const double elevation =
          lerp(g.elevation_min_deg, g.elevation_max_deg, ei, g.elevation_count) * kDegToRad;
      for (int ai = 0; ai < g.azimuth_count; ++ai) {
        const double azimuth =
            (g.azimuth_offset_deg + 360.0 * ai / g.azimuth_count) * kDegToRad;
        const Pose world_from_cam = look_at_origin(radius, azimuth, elevation, g.roll_deg * kDegToRad);
        if (!board_visible(board, K, world_from_cam.inverse(), g.image_margin_px)) continue;
        out.poses.push_back(robot_pose_for_camera(gt, world_from_cam));
      }
    }
  }
  if (out.empty()) {
    throw CalibrationError(ErrorCode::kEmptyCandidateSet, "no candidate passes the visibility check");
  }
  return out;
}

std::vector<Pose> sample_cap_poses(const CandidateGeometry& g, const TargetBoard& board,
                                   const CameraIntrinsics& K, const CalibrationParams& gt,
                                   std::size_t count, std::uint64_t seed) {
  g.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Pose> out;
  out.reserve(count);
  const std::size_t max_attempts = 1000 * (count + 1);
  for (std::size_t attempt = 0; out.size() < count && attempt < max_attempts; ++attempt) {
    const double radius = g.radius_min + (g.radius_max - g.radius_min) * unit(rng);
    const double azimuth = 2.0 * std::numbers::pi * unit(rng);
    const double elevation =
        (g.elevation_min_deg + (g.elevation_max_deg - g.elevation_min_deg) * unit(rng)) * kDegToRad;
    const Pose world_from_cam = look_at_origin(radius, azimuth, elevation, g.roll_deg * kDegToRad);
    if (!board_visible(board, K, world_from_cam.inverse(), g.image_margin_px)) continue;
    out.push_back(robot_pose_for_camera(gt, world_from_cam));
  }
  if (out.size() < count) {
    throw CalibrationError(ErrorCode::kEmptyCandidateSet, "could not sample enough visible poses");
  }
  return out;
}

std::vector<PixelObservation> predict_observations(const CalibrationParams& theta,
                                                   const Pose& ee_from_base,
                                                   const TargetBoard& board,
                                                   const CameraIntrinsics& K, double margin) {
  const Pose cw = cam_from_world(theta, ee_from_base);
  std::vector<PixelObservation> out;
  out.reserve(board.size());
  for (std::size_t id = 0; id < board.size(); ++id) {
    const Vector3 pc = cw.act(board.points[id]);
    if (pc.z() <= kMinDepth) continue;
    const Vector2 uv = project(K, pc);
    if (!K.contains(uv, margin)) continue;
    out.push_back({static_cast<int>(id), uv.x(), uv.y()});
  }
  return out;
}

MeasurementSet simulate_measurement(const Scene& scene, const Pose& commanded, std::uint64_t seed) {
  return simulate_measurement(scene.ground_truth, commanded, scene.board, scene.intrinsics,
                              scene.noise, seed);
}

MeasurementSet simulate_measurement(const CalibrationParams& gt, const Pose& commanded,
                                    const TargetBoard& board, const CameraIntrinsics& K,
                                    const NoiseModel& noise, std::uint64_t seed) {
  noise.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Fixed draw order (6 robot draws, then 2 per marker) keeps streams aligned
  // regardless of which sigmas are zero.
  Twist robot_noise;
  for (int i = 0; i < 3; ++i) robot_noise(i) = noise.robot_trans_sigma * gauss(rng);
  for (int i = 3; i < 6; ++i) robot_noise(i) = noise.robot_rot_sigma * gauss(rng);

  const Pose cw = cam_from_world(gt, commanded);
  std::vector<PixelObservation> obs;
  obs.reserve(board.size());
  for (std::size_t id = 0; id < board.size(); ++id) {
    const double du = noise.pixel_sigma * gauss(rng);
    const double dv = noise.pixel_sigma * gauss(rng);
    const Vector3 pc = cw.act(board.points[id]);
    if (pc.z() <= kMinDepth) continue;
    const Vector2 uv = project(K, pc) + Vector2(du, dv);
    if (!K.contains(uv)) continue;
    obs.push_back({static_cast<int>(id), uv.x(), uv.y()});
  }
  if (obs.size() < 4) {
    throw CalibrationError(ErrorCode::kMarkerOutOfView,
                           "only " + std::to_string(obs.size()) + " markers remain in view");
  }
  const Pose reported = robot_noise.isZero(0.0) ? commanded : exp_se3(robot_noise) * commanded;
  return MeasurementSet(reported, std::move(obs));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  // splitmix64 finalizer applied to a running combination.
  const auto splitmix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ a);
  h = splitmix(h ^ b);
  h = splitmix(h ^ c);
  return h;
}

MeasurementSet Simulator::measure(std::size_t candidate_index, const Pose& commanded) {
  if (visits_.size() <= candidate_index) visits_.resize(candidate_index + 1, 0);
  const std::uint32_t visit = visits_[candidate_index]++;
  return simulate_measurement(scene_, commanded, mix_seed(seed_, 0x5eed, candidate_index, visit));
}

}  // namespace nbvcalib
