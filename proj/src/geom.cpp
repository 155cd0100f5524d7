#include "nbvcalib/geom.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/SVD>

#include "nbvcalib/error.hpp"

namespace nbvcalib {

Matrix3 skew(const Vector3& v) {
  Matrix3 s;
  // clang-format off
  s <<    0.0, -v.z(),  v.y(),
        v.z(),    0.0, -v.x(),
       -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

Matrix3 exp_so3(const Vector3& phi) {
  const double theta = phi.norm();
  const Matrix3 K = skew(phi);
  if (theta < kSmallAngle) {
    return Matrix3::Identity() + K + 0.5 * K * K;
  }
  const double half = 0.5 * theta;
  const double a = std::sin(theta) / theta;
  const double s = std::sin(half) / half;
  const double b = 0.5 * s * s;  // (1 - cos) / theta^2 without cancellation
  return Matrix3::Identity() + a * K + b * K * K;
}

Vector3 log_so3(const Matrix3& R) {
  Eigen::Quaterniond q(R);
  q.normalize();
  double w = q.w();
  Vector3 v = q.vec();
  if (w < 0.0) {
    w = -w;
    v = -v;
  }
  const double vn = v.norm();
  if (vn < kSmallAngle) {
    // angle / |v| = (2 / w) * (1 - |v|^2 / (3 w^2)) + O(|v|^4)
    return (2.0 / w) * (1.0 - vn * vn / (3.0 * w * w)) * v;
  }
  const double theta = 2.0 * std::atan2(vn, w);
  return (theta / vn) * v;
}

Matrix3 left_jacobian_so3(const Vector3& phi) {
  const double theta = phi.norm();
  const Matrix3 K = skew(phi);
  if (theta < kSmallAngle) {
    return Matrix3::Identity() + 0.5 * K + (1.0 / 6.0) * K * K;
  }
  const double t2 = theta * theta;
  const double half = 0.5 * theta;
  const double s = std::sin(half) / half;
  const double c1 = 0.5 * s * s;
  const double c2 = (theta - std::sin(theta)) / (t2 * theta);
  return Matrix3::Identity() + c1 * K + c2 * K * K;
}

Matrix3 left_jacobian_so3_inverse(const Vector3& phi) {
  const double theta = phi.norm();
  const Matrix3 K = skew(phi);
  if (theta < kSmallAngle) {
    return Matrix3::Identity() - 0.5 * K + (1.0 / 12.0) * K * K;
  }
  const double t2 = theta * theta;
  const double c = 1.0 / t2 - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  return Matrix3::Identity() - 0.5 * K + c * K * K;
}

Matrix3 nearest_rotation(const Matrix3& M) {
  Eigen::JacobiSVD<Matrix3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 D = Matrix3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
    D(2, 2) = -1.0;
  }
  return svd.matrixU() * D * svd.matrixV().transpose();
}

Pose Pose::from_matrix(const Eigen::Matrix4d& m) {
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

Pose Pose::from_quaternion(const Eigen::Quaterniond& q, const Vector3& t) {
  return {q.normalized().toRotationMatrix(), t};
}

Eigen::Quaterniond Pose::quaternion() const {
  Eigen::Quaterniond q(rotation_);
  q.normalize();
  if (q.w() < 0.0) {
    q.coeffs() = -q.coeffs();
  }
  return q;
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Pose Pose::inverse() const {
  const Matrix3 rt = rotation_.transpose();
  return {rt, -(rt * translation_)};
}

bool Pose::is_approx(const Pose& other, double tol) const {
  return (rotation_ - other.rotation_).cwiseAbs().maxCoeff() <= tol &&
         (translation_ - other.translation_).cwiseAbs().maxCoeff() <= tol;
}

Pose exp_se3(const Twist& xi) {
  const Vector3 rho = xi.head<3>();
  const Vector3 phi = xi.tail<3>();
  return {exp_so3(phi), left_jacobian_so3(phi) * rho};
}

Twist log_se3(const Pose& T) {
  const double angle = rotation_angle(T);
  if (std::numbers::pi - angle < 1e-6) {
    throw CalibrationError(ErrorCode::kAngleAtPi,
                           "rotation angle " + std::to_string(angle) + " is too close to pi");
  }
  const Vector3 phi = log_so3(T.rotation());
  Twist xi;
  xi.head<3>() = left_jacobian_so3_inverse(phi) * T.translation();
  xi.tail<3>() = phi;
  return xi;
}

double rotation_angle(const Matrix3& R) {
  // atan2 form stays accurate at both ends of [0, pi].
  const Vector3 axis(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  const double s = 0.5 * axis.norm();
  const double c = 0.5 * (R.trace() - 1.0);
  return std::atan2(s, c);
}

double rotation_angle(const Pose& T) { return rotation_angle(T.rotation()); }

Matrix6 adjoint(const Pose& T) {
  Matrix6 ad = Matrix6::Zero();
  const Matrix3& R = T.rotation();
  ad.topLeftCorner<3, 3>() = R;
  ad.topRightCorner<3, 3>() = skew(T.translation()) * R;
  ad.bottomRightCorner<3, 3>() = R;
  return ad;
}

Eigen::Matrix<double, 3, 6> point_perturbation_jacobian(const Vector3& p) {
  Eigen::Matrix<double, 3, 6> j;
  j.leftCols<3>().setIdentity();
  j.rightCols<3>() = -skew(p);
  return j;
}

}  // namespace nbvcalib
