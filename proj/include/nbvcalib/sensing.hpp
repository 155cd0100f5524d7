#pragma once

// Camera model, calibration target, candidate viewpoints and the synthetic
// robot + camera used in place of real hardware.
//
// Frame naming: `a_from_b` maps points expressed in frame b into frame a.
// Frames: world (calibration board), base (robot), ee (end-effector), cam.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "nbvcalib/geom.hpp"

namespace nbvcalib {

using Vector2 = Eigen::Vector2d;
using ProjectionJacobian = Eigen::Matrix<double, 2, 3>;

/// Points with depth at or below this are treated as behind the camera.
inline constexpr double kMinDepth = 1e-9;

struct CameraIntrinsics {
  double fx = 1100.0;
  double fy = 1100.0;
  double cx = 640.0;
  double cy = 512.0;
  int width = 1280;
  int height = 1024;

  /// Throws kInvalidArgument when the invariants do not hold.
  void validate() const;
  bool contains(const Vector2& uv, double margin = 0.0) const {
    return uv.x() >= margin && uv.y() >= margin && uv.x() < width - margin &&
           uv.y() < height - margin;
  }
};

/// Planar grid of markers lying in the world z = 0 plane, centred on the
/// world origin. Marker ids are row-major, 0..rows*cols-1.
struct TargetBoard {
  int rows = 0;
  int cols = 0;
  double spacing = 0.0;
  std::vector<Vector3> points;

  std::size_t size() const { return points.size(); }
  bool has_marker(int id) const { return id >= 0 && static_cast<std::size_t>(id) < points.size(); }
  const Vector3& point(int id) const;
};

struct PixelObservation {
  int marker_id = 0;
  double u = 0.0;
  double v = 0.0;

  Vector2 uv() const { return {u, v}; }
  friend bool operator==(const PixelObservation&, const PixelObservation&) = default;
};

/// One robot pose and the marker detections taken from it. Observations are
/// kept sorted by marker id; ids are unique and the set is never empty.
class MeasurementSet {
 public:
  MeasurementSet(const Pose& ee_from_base, std::vector<PixelObservation> observations);

  const Pose& ee_from_base() const { return ee_from_base_; }
  const std::vector<PixelObservation>& observations() const { return observations_; }
  std::size_t size() const { return observations_.size(); }

 private:
  Pose ee_from_base_;
  std::vector<PixelObservation> observations_;
};

struct NoiseModel {
  double pixel_sigma = 0.5;               // px
  double robot_rot_sigma = 8.726646259971648e-4;  // rad (0.05 deg)
  double robot_trans_sigma = 1e-4;        // m

  static NoiseModel none() { return {0.0, 0.0, 0.0}; }
  void validate() const;
};

/// The unknowns: end-effector -> camera and world -> base.
struct CalibrationParams {
  Pose cam_from_ee;
  Pose base_from_world;
};

/// Camera pose in the world implied by a robot pose and calibration.
inline Pose cam_from_world(const CalibrationParams& theta, const Pose& ee_from_base) {
  return theta.cam_from_ee * ee_from_base * theta.base_from_world;
}

/// Robot pose that places the camera at `world_from_cam` for the given calibration.
Pose robot_pose_for_camera(const CalibrationParams& theta, const Pose& world_from_cam);

struct Scene {
  TargetBoard board;
  CameraIntrinsics intrinsics;
  CalibrationParams ground_truth;
  NoiseModel noise;
};

/// 4x4 board with 30 mm spacing, 1280x1024 camera with fx = fy = 1100 px,
/// default noise, and a fixed ground-truth calibration.
Scene default_scene();

/// Spherical-cap sampling around the board centre. Angles in degrees,
/// distances in meters.
struct CandidateGeometry {
  double radius_min = 0.45;
  double radius_max = 0.65;
  int radius_count = 2;
  int azimuth_count = 8;
  double azimuth_offset_deg = 0.0;
  double elevation_min_deg = 40.0;
  double elevation_max_deg = 80.0;
  int elevation_count = 3;
  double roll_deg = 0.0;
  /// Markers must project at least this far inside the image border.
  double image_margin_px = 20.0;

  void validate() const;
};

struct CandidateSet {
  std::vector<Pose> poses;  // robot poses (ee_from_base); index is the stable id

  std::size_t size() const { return poses.size(); }
  bool empty() const { return poses.empty(); }
};

/// Perspective projection of a camera-frame point. Throws kBehindCamera.
Vector2 project(const CameraIntrinsics& K, const Vector3& p_cam);
ProjectionJacobian project_jacobian(const CameraIntrinsics& K, const Vector3& p_cam);

/// Throws kBadDimensions for rows/cols < 2 or non-positive spacing.
TargetBoard make_board(int rows, int cols, double spacing);

/// Camera looking at the world origin from spherical coordinates (radians).
/// The camera x axis is tangent to the azimuth circle, then rotated by `roll`
/// about the optical axis. Returns world_from_cam.
Pose look_at_origin(double radius, double azimuth, double elevation, double roll = 0.0);

/// True when every marker is in front of the camera and inside the image
/// with the given margin.
bool board_visible(const TargetBoard& board, const CameraIntrinsics& K, const Pose& cam_from_world,
                   double margin = 0.0);

/// Throws kEmptyCandidateSet when visibility rejects every sample.
CandidateSet generate_candidates(const CandidateGeometry& geometry, const TargetBoard& board,
                                 const CameraIntrinsics& K, const CalibrationParams& ground_truth);

/// Uniform random robot poses over the same cap (continuous, not on the
/// candidate grid), visibility-filtered. Used for held-out validation.
std::vector<Pose> sample_cap_poses(const CandidateGeometry& geometry, const TargetBoard& board,
                                   const CameraIntrinsics& K, const CalibrationParams& ground_truth,
                                   std::size_t count, std::uint64_t seed);

/// Noiseless marker projections from a robot pose under calibration `theta`.
/// Markers outside the image (with margin) or behind the camera are skipped.
std::vector<PixelObservation> predict_observations(const CalibrationParams& theta,
                                                   const Pose& ee_from_base,
                                                   const TargetBoard& board,
                                                   const CameraIntrinsics& K,
                                                   double margin = 0.0);

/// Synthetic measurement at a commanded robot pose. Deterministic in `seed`.
/// Markers pushed out of the image by noise are dropped; throws
/// kMarkerOutOfView when fewer than 4 remain.
MeasurementSet simulate_measurement(const Scene& scene, const Pose& commanded_ee_from_base,
                                    std::uint64_t seed);
MeasurementSet simulate_measurement(const CalibrationParams& ground_truth,
                                    const Pose& commanded_ee_from_base, const TargetBoard& board,
                                    const CameraIntrinsics& K, const NoiseModel& noise,
                                    std::uint64_t seed);

/// Deterministic 64-bit mixing used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

/// Source of measurements for the active calibration loop: the simulator
/// here, a robot + camera driver elsewhere.
class MeasurementSource {
 public:
  virtual ~MeasurementSource() = default;
  virtual const TargetBoard& board() const = 0;
  virtual const CameraIntrinsics& intrinsics() const = 0;
  virtual MeasurementSet measure(std::size_t candidate_index, const Pose& commanded_ee_from_base) = 0;
};

/// Simulated robot + camera. The noise draw for a measurement depends only on
/// (seed, candidate index, how many times that candidate was measured), so
/// two runs that visit the same candidate observe the same data.
class Simulator final : public MeasurementSource {
 public:
  Simulator(Scene scene, std::uint64_t seed) : scene_(std::move(scene)), seed_(seed) {}

  const TargetBoard& board() const override { return scene_.board; }
  const CameraIntrinsics& intrinsics() const override { return scene_.intrinsics; }
  const Scene& scene() const { return scene_; }
  MeasurementSet measure(std::size_t candidate_index, const Pose& commanded_ee_from_base) override;

 private:
  Scene scene_;
  std::uint64_t seed_;
  std::vector<std::uint32_t> visits_;
};

}  // namespace nbvcalib
