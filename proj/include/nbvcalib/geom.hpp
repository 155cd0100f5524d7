#pragma once

// SO(3)/SE(3) toolbox used by every Jacobian in the library.
//
// Conventions:
//   * Twist ordering is (rho, phi): translation first, rotation second.
//   * Perturbations are applied on the LEFT: T <- exp(dxi) * T.
//     With this choice d(T*p)/d(dxi) = [I | -[T*p]x].

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace nbvcalib {

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;
using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Twist = Vector6;

/// Angles below this use Taylor expansions in exp/log/Jacobians.
inline constexpr double kSmallAngle = 1e-8;

Matrix3 skew(const Vector3& v);

/// Rodrigues formula.
Matrix3 exp_so3(const Vector3& phi);

/// Rotation vector of R, angle in [0, pi]. Stable near 0 and near pi.
Vector3 log_so3(const Matrix3& R);

/// Left Jacobian of SO(3) and its inverse.
Matrix3 left_jacobian_so3(const Vector3& phi);
Matrix3 left_jacobian_so3_inverse(const Vector3& phi);

/// Projects an arbitrary 3x3 matrix onto the closest rotation (Frobenius),
/// enforcing det = +1.
Matrix3 nearest_rotation(const Matrix3& M);

/// Rigid transform T = [R t; 0 1]. Maps points of the source frame into the
/// target frame: act(p) = R p + t.
class Pose {
 public:
  Pose() : rotation_(Matrix3::Identity()), translation_(Vector3::Zero()) {}
  Pose(const Matrix3& rotation, const Vector3& translation)
      : rotation_(rotation), translation_(translation) {}

  static Pose identity() { return {}; }
  static Pose from_matrix(const Eigen::Matrix4d& m);
  /// Quaternion is normalized before use.
  static Pose from_quaternion(const Eigen::Quaterniond& q, const Vector3& t);

  const Matrix3& rotation() const { return rotation_; }
  const Vector3& translation() const { return translation_; }
  Eigen::Quaterniond quaternion() const;
  Eigen::Matrix4d matrix() const;

  Pose inverse() const;
  Vector3 act(const Vector3& p) const { return rotation_ * p + translation_; }
  Pose operator*(const Pose& other) const {
    return {rotation_ * other.rotation_, rotation_ * other.translation_ + translation_};
  }
  Vector3 operator*(const Vector3& p) const { return act(p); }

  bool is_approx(const Pose& other, double tol = 1e-9) const;

 private:
  Matrix3 rotation_;
  Vector3 translation_;
};

inline Pose compose(const Pose& a, const Pose& b) { return a * b; }
inline Pose inverse(const Pose& t) { return t.inverse(); }
inline Vector3 act(const Pose& t, const Vector3& p) { return t.act(p); }

Pose exp_se3(const Twist& xi);

/// Throws CalibrationError(kAngleAtPi) when the rotation angle is within
/// 1e-6 of pi.
Twist log_se3(const Pose& T);

/// |phi| of the rotation part, in [0, pi].
double rotation_angle(const Pose& T);
double rotation_angle(const Matrix3& R);

/// exp(dxi) * T
inline Pose left_perturb(const Pose& T, const Twist& dxi) { return exp_se3(dxi) * T; }

/// Adjoint of T acting on (rho, phi) twists: exp(Ad_T xi) = T exp(xi) T^-1.
Matrix6 adjoint(const Pose& T);

/// d(exp(dxi) * p) / d(dxi) at dxi = 0 for a point p already expressed in the
/// target frame: [I | -[p]x].
Eigen::Matrix<double, 3, 6> point_perturbation_jacobian(const Vector3& p);

}  // namespace nbvcalib
