#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "../support/oracle.hpp"
#include "nbvcalib/error.hpp"
#include "nbvcalib/geom.hpp"

using namespace nbvcalib;

namespace {

Twist random_twist(std::mt19937_64& rng, double max_angle) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> angle(0.0, max_angle);
  Vector3 axis(n(rng), n(rng), n(rng));
  Twist xi;
  xi.head<3>() = Vector3(n(rng), n(rng), n(rng));
  xi.tail<3>() = axis.normalized() * angle(rng);
  return xi;
}

}  // namespace

TEST(Geom, ExpLogRoundTripOverSeeds) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    std::mt19937_64 rng(seed);
    const Twist xi = random_twist(rng, std::numbers::pi - 1e-3);
    const Twist back = log_se3(exp_se3(xi));
    ASSERT_LT((back - xi).norm(), 1e-9 * std::max(1.0, xi.norm())) << "seed " << seed;
  }
}

TEST(Geom, ExpOfZeroIsIdentity) {
  EXPECT_TRUE(exp_se3(Twist::Zero()).is_approx(Pose::identity(), 0.0));
}

TEST(Geom, SmallAngleBranchesAreContinuous) {
  for (double a : {1e-12, 1e-9, 1e-8, 1.1e-8, 1e-7, 1e-5}) {
    Twist xi;
    xi << 0.1, -0.2, 0.3, a, -2 * a, 0.5 * a;
    const Pose T = exp_se3(xi);
    const Matrix3 R_ref = Eigen::AngleAxisd(xi.tail<3>().norm(), xi.tail<3>().normalized()).toRotationMatrix();
    EXPECT_LT((T.rotation() - R_ref).norm(), 1e-15);
    EXPECT_LT((log_se3(T) - xi).norm(), 1e-14);
  }
}

TEST(Geom, LogNearPiThrows) {
  Twist xi = Twist::Zero();
  xi(3) = std::numbers::pi;
  try {
    log_se3(exp_se3(xi));
    FAIL() << "expected AngleAtPi";
  } catch (const CalibrationError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAngleAtPi);
  }
}

TEST(Geom, ComposeInverseIsIdentity) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const Pose T = oracle::random_pose(rng, 2.0);
    EXPECT_TRUE((T * T.inverse()).is_approx(Pose::identity(), 1e-12));
    EXPECT_TRUE((T.inverse() * T).is_approx(Pose::identity(), 1e-12));
  }
}

TEST(Geom, RotationStaysOrthonormalAfterManyCompositions) {
  std::mt19937_64 rng(11);
  Pose T;
  for (int i = 0; i < 10000; ++i) T = T * exp_se3(random_twist(rng, 0.3));
  const Matrix3& R = T.rotation();
  EXPECT_LT((R.transpose() * R - Matrix3::Identity()).norm(), 1e-10);
  EXPECT_NEAR(R.determinant(), 1.0, 1e-10);
}

TEST(Geom, ActMatchesHomogeneousMatrix) {
  std::mt19937_64 rng(5);
  const Pose T = oracle::random_pose(rng, 1.0);
  const Vector3 p(0.3, -0.7, 1.1);
  const Eigen::Vector4d h = T.matrix() * p.homogeneous();
  EXPECT_LT((T.act(p) - h.head<3>()).norm(), 1e-14);
}

TEST(Geom, LeftPerturbationJacobianMatchesDifference) {
  std::mt19937_64 rng(9);
  const Pose T = oracle::random_pose(rng, 1.0);
  const Vector3 p(0.2, 0.1, -0.4);
  const Eigen::Matrix<double, 3, 6> J = point_perturbation_jacobian(T.act(p));
  const double h = 1e-6;
  for (int c = 0; c < 6; ++c) {
    Twist d = Twist::Zero();
    d(c) = h;
    const Vector3 fd = (left_perturb(T, d).act(p) - left_perturb(T, -d).act(p)) / (2 * h);
    EXPECT_LT((fd - J.col(c)).norm(), 1e-8) << "column " << c;
  }
}

TEST(Geom, AdjointMovesTwistsAcrossFrames) {
  std::mt19937_64 rng(17);
  const Pose T = oracle::random_pose(rng, 1.0);
  Twist xi;
  xi << 0.01, -0.02, 0.03, 0.02, 0.01, -0.015;
  const Pose lhs = T * exp_se3(xi);
  const Pose rhs = exp_se3(adjoint(T) * xi) * T;
  EXPECT_TRUE(lhs.is_approx(rhs, 1e-12));
}

TEST(Geom, QuaternionRoundTrip) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 100; ++i) {
    const Pose T = oracle::random_pose(rng, 1.0);
    const Eigen::Quaterniond q = T.quaternion();
    EXPECT_GE(q.w(), 0.0);
    EXPECT_TRUE(Pose::from_quaternion(q, T.translation()).is_approx(T, 1e-14));
  }
}

TEST(Geom, NearestRotationProjectsScaledRotation) {
  const Matrix3 R = exp_so3(Vector3(0.3, -0.2, 0.9));
  const Matrix3 P = nearest_rotation(2.5 * R);
  EXPECT_LT((P - R).norm(), 1e-14);
}
