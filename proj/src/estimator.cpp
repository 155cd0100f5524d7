#include "nbvcalib/estimator.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "nbvcalib/error.hpp"

namespace nbvcalib {

namespace {

// Camera-frame and base-frame positions of a marker under theta.
struct ChainPoints {
  Vector3 p_base;
  Vector3 p_cam;
};

ChainPoints chain_points(const CalibrationParams& theta, const Pose& ee_from_base,
                         const Vector3& p_world) {
  const Vector3 p_base = theta.base_from_world.act(p_world);
  const Vector3 p_cam = theta.cam_from_ee.act(ee_from_base.act(p_base));
  return {p_base, p_cam};
}

}  // namespace

void SolverConfig::validate() const {
  if (max_iterations < 1 || absolute_cost_tolerance <= 0.0 || relative_cost_tolerance <= 0.0 ||
      step_tolerance <= 0.0 || initial_damping <= 0.0 || damping_increase <= 1.0 ||
      damping_decrease <= 1.0) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "invalid solver configuration");
  }
}

std::string_view to_string(Convergence c) {
  switch (c) {
    case Convergence::kAbsoluteCost: return "absolute_cost";
    case Convergence::kRelativeCost: return "relative_cost";
    case Convergence::kSmallStep: return "small_step";
    case Convergence::kMaxIterations: return "max_iterations";
  }
  return "unknown";
}

double SolveReport::rms_residual() const {
  return residual_count == 0 ? 0.0 : std::sqrt(final_cost / static_cast<double>(residual_count));
}

Eigen::MatrixXd JacobianBlock::stacked() const {
  Eigen::MatrixXd j(F.rows(), kParamDim);
  j << F, E;
  return j;
}

Matrix12 JacobianBlock::information() const {
  Matrix12 h;
  h.topLeftCorner<6, 6>() = F.transpose() * F;
  h.topRightCorner<6, 6>() = F.transpose() * E;
  h.bottomLeftCorner<6, 6>() = h.topRightCorner<6, 6>().transpose();
  h.bottomRightCorner<6, 6>() = E.transpose() * E;
  return h;
}

ResidualBlock residuals(const CalibrationParams& theta, const MeasurementSet& z,
                        const TargetBoard& board, const CameraIntrinsics& K) {
  ResidualBlock block;
  block.values.resize(2 * static_cast<Eigen::Index>(z.size()));
  block.marker_ids.reserve(z.size());
  const Pose cw = cam_from_world(theta, z.ee_from_base());
  Eigen::Index row = 0;
  for (const auto& obs : z.observations()) {
    const Vector2 predicted = project(K, cw.act(board.point(obs.marker_id)));
    block.values.segment<2>(row) = obs.uv() - predicted;
    block.marker_ids.push_back(obs.marker_id);
    row += 2;
  }
  return block;
}

JacobianBlock jacobian_block(const CalibrationParams& theta, const Pose& ee_from_base,
                             std::span<const int> marker_ids, const TargetBoard& board,
                             const CameraIntrinsics& K) {
  const auto m = static_cast<Eigen::Index>(marker_ids.size());
  JacobianBlock block{BlockMatrix(2 * m, 6), BlockMatrix(2 * m, 6)};
  const Matrix3 R_cb = theta.cam_from_ee.rotation() * ee_from_base.rotation();
  Eigen::Index row = 0;
  for (const int id : marker_ids) {
    const auto [p_base, p_cam] = chain_points(theta, ee_from_base, board.point(id));
    // Leading minus: residual = observed - predicted.
    const ProjectionJacobian d_uv = -project_jacobian(K, p_cam);
    block.F.middleRows<2>(row) = d_uv * point_perturbation_jacobian(p_cam);
    block.E.middleRows<2>(row) = d_uv * R_cb * point_perturbation_jacobian(p_base);
    row += 2;
  }
  return block;
}

JacobianBlock jacobian_block(const CalibrationParams& theta, const MeasurementSet& z,
                             const TargetBoard& board, const CameraIntrinsics& K) {
  std::vector<int> ids;
  ids.reserve(z.size());
  for (const auto& obs : z.observations()) ids.push_back(obs.marker_id);
  return jacobian_block(theta, z.ee_from_base(), ids, board, K);
}

double total_cost(const CalibrationParams& theta, std::span<const MeasurementSet> sets,
                  const TargetBoard& board, const CameraIntrinsics& K) {
  double cost = 0.0;
  for (const auto& z : sets) cost += residuals(theta, z, board, K).values.squaredNorm();
  return cost;
}

LinearSystem assemble(const CalibrationParams& theta, std::span<const MeasurementSet> sets,
                      const TargetBoard& board, const CameraIntrinsics& K) {
  if (sets.empty()) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "no measurement sets to assemble");
  }
  Eigen::Index rows = 0;
  for (const auto& z : sets) rows += 2 * static_cast<Eigen::Index>(z.size());

  LinearSystem sys;
  sys.residual.resize(rows);
  sys.jacobian.resize(rows, kParamDim);
  Eigen::Index row = 0;
  for (const auto& z : sets) {
    const ResidualBlock r = residuals(theta, z, board, K);
    const JacobianBlock j = jacobian_block(theta, z, board, K);
    const Eigen::Index n = r.values.size();
    sys.residual.segment(row, n) = r.values;
    sys.jacobian.block(row, 0, n, 6) = j.F;
    sys.jacobian.block(row, 6, n, 6) = j.E;
    row += n;
  }
  sys.hessian = sys.jacobian.transpose() * sys.jacobian;
  sys.gradient = sys.jacobian.transpose() * sys.residual;
  sys.cost = sys.residual.squaredNorm();
  return sys;
}

Matrix12 accumulate_information(const CalibrationParams& theta,
                                std::span<const MeasurementSet> sets, const TargetBoard& board,
                                const CameraIntrinsics& K) {
  Matrix12 h = Matrix12::Zero();
  for (const auto& z : sets) h += jacobian_block(theta, z, board, K).information();
  return h;
}

CalibrationParams apply_update(const CalibrationParams& theta, const Vector12& delta) {
  return {exp_se3(delta.head<6>()) * theta.cam_from_ee,
          exp_se3(delta.tail<6>()) * theta.base_from_world};
}

SolveReport optimize(const CalibrationParams& initial, std::span<const MeasurementSet> sets,
                     const TargetBoard& board, const CameraIntrinsics& K,
                     const SolverConfig& config) {
  config.validate();
  SolveReport report;
  report.theta = initial;

  LinearSystem sys = assemble(initial, sets, board, K);
  report.residual_count = static_cast<std::size_t>(sys.residual.size());
  report.initial_cost = sys.cost;
  report.final_cost = sys.cost;
  report.cost_trace.push_back(sys.cost);

  if (sys.cost <= config.absolute_cost_tolerance) {
    report.reason = Convergence::kAbsoluteCost;
    return report;
  }

  double lambda = config.initial_damping;
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    report.iterations = iter + 1;

    // Marquardt scaling keeps the damping meaningful across the mixed
    // meter/radian parameter units.
    Vector12 scale = sys.hessian.diagonal().cwiseMax(1e-12 * sys.hessian.diagonal().maxCoeff());
    Vector12 delta;
    bool solved = false;
    while (!solved) {
      Matrix12 damped = sys.hessian;
      damped.diagonal() += lambda * scale;
      Eigen::LLT<Matrix12> llt(damped);
      if (llt.info() == Eigen::Success) {
        delta = llt.solve(-sys.gradient);
        solved = delta.allFinite();
      }
      if (!solved) {
        lambda *= config.damping_increase;
        if (lambda > config.max_damping) {
          throw CalibrationError(ErrorCode::kSingularSystem,
                                 "damped normal equations are not solvable");
        }
      }
    }

    const CalibrationParams candidate = apply_update(report.theta, delta);
    const double candidate_cost = total_cost(candidate, sets, board, K);
    const bool small_step = delta.norm() < config.step_tolerance;

    if (candidate_cost < sys.cost) {
      const double decrease = sys.cost - candidate_cost;
      report.theta = candidate;
      sys = assemble(candidate, sets, board, K);
      report.final_cost = sys.cost;
      report.cost_trace.push_back(sys.cost);
      lambda = std::max(lambda / config.damping_decrease, 1e-16);
      if (sys.cost <= config.absolute_cost_tolerance) {
        report.reason = Convergence::kAbsoluteCost;
        return report;
      }
      if (decrease <= config.relative_cost_tolerance * (sys.cost + decrease)) {
        report.reason = Convergence::kRelativeCost;
        return report;
      }
      if (small_step) {
        report.reason = Convergence::kSmallStep;
        return report;
      }
    } else {
      if (small_step) {
        report.reason = Convergence::kSmallStep;
        return report;
      }
      lambda *= config.damping_increase;
      if (lambda > config.max_damping) {
        // No descent direction left at any damping: we are at a minimum to
        // working precision.
        report.reason = Convergence::kSmallStep;
        return report;
      }
    }
  }
  report.reason = Convergence::kMaxIterations;
  return report;
}

}  // namespace nbvcalib
