#include <cmath>
#include <string>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "nbvcalib/error.hpp"
#include "nbvcalib/estimator.hpp"

namespace nbvcalib {

namespace {

// Null-space dimension > 1 shows up as a second singular value this small
// relative to the largest one.
constexpr double kRotationRankTolerance = 1e-8;

Eigen::Matrix<double, 9, 9> kron3(const Matrix3& a, const Matrix3& b) {
  Eigen::Matrix<double, 9, 9> k;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) k.block<3, 3>(3 * i, 3 * j) = a(i, j) * b;
  }
  return k;
}

}  // namespace

// Solves X A_k = B_k Y with X = cam_from_ee, A_k = ee_from_base_k,
// B_k = cam_from_world_k and Y = world_from_base.
CalibrationParams closed_form_init(std::span<const Pose> world_from_cam,
                                   std::span<const Pose> ee_from_base) {
  if (world_from_cam.size() != ee_from_base.size()) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "camera and robot pose counts differ");
  }
  const auto n = static_cast<Eigen::Index>(ee_from_base.size());
  if (n < 3) {
    throw CalibrationError(ErrorCode::kDegenerateMotion,
                           "at least 3 poses are required, got " + std::to_string(n));
  }

  std::vector<Pose> cam_from_world;
  cam_from_world.reserve(world_from_cam.size());
  for (const auto& p : world_from_cam) cam_from_world.push_back(p.inverse());

  // vec(R_X R_A) = (R_A^T (x) I) vec(R_X);  vec(R_B R_Y) = (I (x) R_B) vec(R_Y)
  Eigen::MatrixXd M(9 * n, 18);
  const Matrix3 I = Matrix3::Identity();
  for (Eigen::Index k = 0; k < n; ++k) {
    const Matrix3& Ra = ee_from_base[k].rotation();
    const Matrix3& Rb = cam_from_world[k].rotation();
    M.block<9, 9>(9 * k, 0) = kron3(Ra.transpose(), I);
    M.block<9, 9>(9 * k, 9) = -kron3(I, Rb);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(16) <= kRotationRankTolerance * sv(0)) {
    throw CalibrationError(ErrorCode::kDegenerateMotion,
                           "rotation system is rank deficient (parallel rotation axes?)");
  }
  const Eigen::Matrix<double, 18, 1> v = svd.matrixV().col(17);
  Matrix3 Rx = Eigen::Map<const Matrix3>(v.data());
  Matrix3 Ry = Eigen::Map<const Matrix3>(v.data() + 9);
  // Fix the scale (and sign) of the null vector so det(Rx) = 1.
  const double alpha = 1.0 / std::cbrt(Rx.determinant());
  Rx = nearest_rotation(alpha * Rx);
  Ry = nearest_rotation(alpha * Ry);

  // R_X t_A + t_X = R_B t_Y + t_B  =>  [I  -R_B] [t_X; t_Y] = t_B - R_X t_A
  Eigen::MatrixXd A(3 * n, 6);
  Eigen::VectorXd b(3 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    A.block<3, 3>(3 * k, 0) = I;
    A.block<3, 3>(3 * k, 3) = -cam_from_world[k].rotation();
    b.segment<3>(3 * k) =
        cam_from_world[k].translation() - Rx * ee_from_base[k].translation();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < 6) {
    throw CalibrationError(ErrorCode::kDegenerateMotion, "translation system is rank deficient");
  }
  const Eigen::Matrix<double, 6, 1> t = qr.solve(b);

  const Pose world_from_base(Ry, t.tail<3>());
  return {Pose(Rx, t.head<3>()), world_from_base.inverse()};
}

CalibrationParams initialize_from_measurements(std::span<const MeasurementSet> sets,
                                               const TargetBoard& board,
                                               const CameraIntrinsics& K) {
  std::vector<Pose> cams;
  std::vector<Pose> robots;
  cams.reserve(sets.size());
  robots.reserve(sets.size());
  for (const auto& z : sets) {
    cams.push_back(solve_pnp(board, z.observations(), K));
    robots.push_back(z.ee_from_base());
  }
  return closed_form_init(cams, robots);
}

}  // namespace nbvcalib
