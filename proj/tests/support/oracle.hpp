#pragma once

// Reference computations for tests, written independently of the library
// math: extended-precision projection for finite differences and
// eigenvalue-based entropies.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "nbvcalib/estimator.hpp"
#include "nbvcalib/sensing.hpp"

namespace oracle {

using LD = long double;
using M3 = Eigen::Matrix<LD, 3, 3>;
using V3 = Eigen::Matrix<LD, 3, 1>;

struct PoseL {
  M3 R = M3::Identity();
  V3 t = V3::Zero();

  PoseL operator*(const PoseL& o) const { return {R * o.R, R * o.t + t}; }
  V3 operator*(const V3& p) const { return R * p + t; }
};

inline PoseL widen(const nbvcalib::Pose& p) {
  return {p.rotation().cast<LD>(), p.translation().cast<LD>()};
}

inline M3 hat(const V3& w) {
  M3 m;
  m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return m;
}

// Rodrigues, for angles well away from zero only (finite-difference steps).
inline PoseL expmap(const Eigen::Matrix<LD, 6, 1>& xi) {
  const V3 rho = xi.head<3>();
  const V3 phi = xi.tail<3>();
  const LD th = phi.norm();
  const M3 W = hat(phi);
  PoseL out;
  if (th == 0) {
    out.t = rho;
    return out;
  }
  const LD a = std::sin(th) / th;
  const LD b = (1 - std::cos(th)) / (th * th);
  const LD c = (th - std::sin(th)) / (th * th * th);
  out.R = M3::Identity() + a * W + b * W * W;
  out.t = (M3::Identity() + b * W + c * W * W) * rho;
  return out;
}

inline Eigen::Matrix<LD, 2, 1> pixel(const nbvcalib::CameraIntrinsics& K, const PoseL& ce,
                                     const PoseL& eb, const PoseL& bw, const V3& pw) {
  const V3 pc = ce * (eb * (bw * pw));
  return {static_cast<LD>(K.fx) * pc.x() / pc.z() + static_cast<LD>(K.cx),
          static_cast<LD>(K.fy) * pc.y() / pc.z() + static_cast<LD>(K.cy)};
}

/// Central-difference Jacobian of the residual (observed - predicted) with
/// respect to left perturbations [xi_ce | xi_bw].
inline Eigen::MatrixXd fd_jacobian(const nbvcalib::CalibrationParams& theta,
                                   const nbvcalib::Pose& ee_from_base, const std::vector<int>& ids,
                                   const nbvcalib::TargetBoard& board,
                                   const nbvcalib::CameraIntrinsics& K, LD step = 1e-6L) {
  const PoseL ce = widen(theta.cam_from_ee);
  const PoseL eb = widen(ee_from_base);
  const PoseL bw = widen(theta.base_from_world);
  Eigen::MatrixXd J(2 * ids.size(), 12);
  for (int c = 0; c < 12; ++c) {
    Eigen::Matrix<LD, 6, 1> d = Eigen::Matrix<LD, 6, 1>::Zero();
    d(c % 6) = step;
    const PoseL plus = expmap(d);
    const PoseL minus = expmap(-d);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const V3 pw = board.point(ids[i]).cast<LD>();
      Eigen::Matrix<LD, 2, 1> hi, lo;
      if (c < 6) {
        hi = pixel(K, plus * ce, eb, bw, pw);
        lo = pixel(K, minus * ce, eb, bw, pw);
      } else {
        hi = pixel(K, ce, eb, plus * bw, pw);
        lo = pixel(K, ce, eb, minus * bw, pw);
      }
      const Eigen::Matrix<LD, 2, 1> g = -(hi - lo) / (2 * step);
      J(2 * i, c) = static_cast<double>(g(0));
      J(2 * i + 1, c) = static_cast<double>(g(1));
    }
  }
  return J;
}

/// 0.5 ln((2 pi e)^n det(S)) with det from eigenvalues of the information.
inline double entropy_from_eigen(const Eigen::MatrixXd& information, double scale = 1.0) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(information);
  const auto n = static_cast<double>(information.rows());
  long double sum_log = 0;
  for (Eigen::Index i = 0; i < information.rows(); ++i) sum_log += std::log((long double)es.eigenvalues()(i));
  const long double h = 0.5L * n * std::log(2.0L * std::numbers::pi_v<long double> * std::numbers::e_v<long double>) +
                        0.5L * (n * std::log((long double)scale) - sum_log);
  return static_cast<double>(h);
}

/// Random orientation and translation in a box of half-width `extent`.
inline nbvcalib::Pose random_pose(std::mt19937_64& rng, double extent) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(-extent, extent);
  const Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return nbvcalib::Pose::from_quaternion(q, nbvcalib::Vector3(u(rng), u(rng), u(rng)));
}

/// Random calibration with the camera looking at the board from a random
/// cap position; returns the robot pose that realizes it.
struct RandomView {
  nbvcalib::CalibrationParams theta;
  nbvcalib::Pose ee_from_base;
};

inline RandomView random_view(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> radius(0.35, 0.8);
  std::uniform_real_distribution<double> azimuth(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> elevation(0.6, 1.45);
  std::uniform_real_distribution<double> roll(-0.5, 0.5);
  RandomView v;
  v.theta.cam_from_ee = random_pose(rng, 0.1);
  v.theta.base_from_world = random_pose(rng, 0.8);
  const nbvcalib::Pose world_from_cam =
      nbvcalib::look_at_origin(radius(rng), azimuth(rng), elevation(rng), roll(rng));
  v.ee_from_base = nbvcalib::robot_pose_for_camera(v.theta, world_from_cam);
  return v;
}

/// Rotation-only twist distance helpers.
inline double translation_error_m(const nbvcalib::Pose& a, const nbvcalib::Pose& b) {
  return (a.translation() - b.translation()).norm();
}
inline double rotation_error_rad(const nbvcalib::Pose& a, const nbvcalib::Pose& b) {
  const Eigen::Matrix3d d = a.rotation().transpose() * b.rotation();
  return Eigen::AngleAxisd(d).angle();
}

}  // namespace oracle
