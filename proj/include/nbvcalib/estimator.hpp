#pragma once

// AX = YB calibration core.
//
// Unknowns are perturbed on the left, T <- exp(dxi) T, and stacked as the
// 12-vector [xi_cam_from_ee | xi_base_from_world] with (rho, phi) ordering
// inside each 6-block. Residuals are observed minus predicted pixels.

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "nbvcalib/geom.hpp"
#include "nbvcalib/sensing.hpp"

namespace nbvcalib {

inline constexpr int kParamDim = 12;
using Vector12 = Eigen::Matrix<double, kParamDim, 1>;
using Matrix12 = Eigen::Matrix<double, kParamDim, kParamDim>;
using BlockMatrix = Eigen::Matrix<double, Eigen::Dynamic, 6>;

struct ResidualBlock {
  Eigen::VectorXd values;       // [r_u, r_v] per observation, px
  std::vector<int> marker_ids;  // ascending
};

/// Jacobian of the residual block w.r.t. the left perturbations of
/// cam_from_ee (F) and base_from_world (E).
struct JacobianBlock {
  BlockMatrix F;
  BlockMatrix E;

  Eigen::Index rows() const { return F.rows(); }
  Eigen::MatrixXd stacked() const;
  /// [F E]^T [F E]
  Matrix12 information() const;
};

struct LinearSystem {
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;  // rows: measurement set, then marker id
  Matrix12 hessian;          // J^T J
  Vector12 gradient;         // J^T r
  double cost = 0.0;         // r^T r
};

struct SolverConfig {
  int max_iterations = 50;
  double absolute_cost_tolerance = 1e-20;  // px^2
  double relative_cost_tolerance = 1e-12;
  double step_tolerance = 1e-12;
  double initial_damping = 1e-4;
  double damping_increase = 10.0;
  double damping_decrease = 10.0;
  double max_damping = 1e16;

  void validate() const;
};

enum class Convergence { kAbsoluteCost, kRelativeCost, kSmallStep, kMaxIterations };
std::string_view to_string(Convergence c);

struct SolveReport {
  CalibrationParams theta;
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::vector<double> cost_trace;  // initial cost, then one entry per accepted step
  Convergence reason = Convergence::kMaxIterations;
  std::size_t residual_count = 0;

  bool converged() const { return reason != Convergence::kMaxIterations; }
  /// sqrt(cost / number of scalar residuals), px
  double rms_residual() const;
};

ResidualBlock residuals(const CalibrationParams& theta, const MeasurementSet& z,
                        const TargetBoard& board, const CameraIntrinsics& K);

JacobianBlock jacobian_block(const CalibrationParams& theta, const MeasurementSet& z,
                             const TargetBoard& board, const CameraIntrinsics& K);

/// Jacobian block for a hypothetical view with markers `marker_ids` seen from
/// `ee_from_base`. Pixel values do not enter the Jacobian.
JacobianBlock jacobian_block(const CalibrationParams& theta, const Pose& ee_from_base,
                             std::span<const int> marker_ids, const TargetBoard& board,
                             const CameraIntrinsics& K);

double total_cost(const CalibrationParams& theta, std::span<const MeasurementSet> sets,
                  const TargetBoard& board, const CameraIntrinsics& K);

/// Throws kInvalidArgument for an empty set list.
LinearSystem assemble(const CalibrationParams& theta, std::span<const MeasurementSet> sets,
                      const TargetBoard& board, const CameraIntrinsics& K);

/// Sum over sets of the per-block information, without forming the stacked J.
Matrix12 accumulate_information(const CalibrationParams& theta,
                                std::span<const MeasurementSet> sets, const TargetBoard& board,
                                const CameraIntrinsics& K);

/// exp(delta_ce) * cam_from_ee, exp(delta_bw) * base_from_world
CalibrationParams apply_update(const CalibrationParams& theta, const Vector12& delta);

/// Levenberg-Marquardt on the unweighted reprojection cost. Throws
/// kSingularSystem if the damped normal equations cannot be solved; hitting
/// max_iterations is reported through SolveReport::reason.
SolveReport optimize(const CalibrationParams& initial, std::span<const MeasurementSet> sets,
                     const TargetBoard& board, const CameraIntrinsics& K,
                     const SolverConfig& config = {});

/// Linear AX = YB initializer from per-frame camera poses (world_from_cam,
/// e.g. from PnP) and robot poses (ee_from_base). Rotations from the null
/// vector of the Kronecker system, translations by linear least squares.
/// Throws kDegenerateMotion for fewer than 3 frames or when the rotation
/// system has a multi-dimensional null space.
CalibrationParams closed_form_init(std::span<const Pose> world_from_cam,
                                   std::span<const Pose> ee_from_base);

/// Planar PnP: normalized homography DLT followed by Gauss-Newton refinement
/// of the reprojection error. Returns world_from_cam. Throws
/// kDegenerateConfiguration for fewer than 4 or collinear points.
Pose solve_pnp(const TargetBoard& board, std::span<const PixelObservation> observations,
               const CameraIntrinsics& K);

/// PnP on each set, then closed_form_init.
CalibrationParams initialize_from_measurements(std::span<const MeasurementSet> sets,
                                               const TargetBoard& board,
                                               const CameraIntrinsics& K);

}  // namespace nbvcalib
