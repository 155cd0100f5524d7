#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "nbvcalib/error.hpp"
#include "nbvcalib/estimator.hpp"

namespace nbvcalib {

namespace {

using Vector2List = std::vector<Vector2, Eigen::aligned_allocator<Vector2>>;

// Similarity that moves the centroid to the origin and scales the mean
// distance to sqrt(2).
Matrix3 normalizing_transform(const Vector2List& pts) {
  Vector2 mean = Vector2::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  double dist = 0.0;
  for (const auto& p : pts) dist += (p - mean).norm();
  dist /= static_cast<double>(pts.size());
  const double s = std::sqrt(2.0) / dist;
  Matrix3 T;
  // clang-format off
  T << s,   0.0, -s * mean.x(),
       0.0, s,   -s * mean.y(),
       0.0, 0.0, 1.0;
  // clang-format on
  return T;
}

bool collinear(const Vector2List& pts) {
  Vector2 mean = Vector2::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  const auto ev = es.eigenvalues();
  return ev(1) <= 0.0 || ev(0) <= 1e-12 * ev(1);
}

double reprojection_cost(const Pose& cam_from_world, const std::vector<Vector3>& world,
                         const Vector2List& pixels, const CameraIntrinsics& K) {
  double cost = 0.0;
  for (std::size_t i = 0; i < world.size(); ++i) {
    const Vector3 pc = cam_from_world.act(world[i]);
    if (pc.z() <= kMinDepth) return std::numeric_limits<double>::infinity();
    cost += (pixels[i] - project(K, pc)).squaredNorm();
  }
  return cost;
}

Pose refine_pose(Pose cam_from_world, const std::vector<Vector3>& world,
                 const Vector2List& pixels, const CameraIntrinsics& K) {
  double cost = reprojection_cost(cam_from_world, world, pixels, K);
  double lambda = 1e-6;
  for (int iter = 0; iter < 100 && cost > 1e-24; ++iter) {
    Matrix6 H = Matrix6::Zero();
    Vector6 g = Vector6::Zero();
    for (std::size_t i = 0; i < world.size(); ++i) {
      const Vector3 pc = cam_from_world.act(world[i]);
      const Vector2 r = pixels[i] - project(K, pc);
      const Eigen::Matrix<double, 2, 6> J =
          -project_jacobian(K, pc) * point_perturbation_jacobian(pc);
      H += J.transpose() * J;
      g += J.transpose() * r;
    }
    bool accepted = false;
    while (!accepted && lambda < 1e16) {
      Matrix6 damped = H;
      damped.diagonal() += lambda * H.diagonal();
      const Vector6 delta = damped.ldlt().solve(-g);
      const Pose next = exp_se3(delta) * cam_from_world;
      const double next_cost = reprojection_cost(next, world, pixels, K);
      if (next_cost < cost) {
        const double decrease = cost - next_cost;
        cam_from_world = next;
        cost = next_cost;
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        if (decrease <= 1e-15 * (cost + decrease) || delta.norm() < 1e-14) return cam_from_world;
      } else {
        if (delta.norm() < 1e-14) return cam_from_world;
        lambda *= 10.0;
      }
    }
    if (!accepted) break;
  }
  return cam_from_world;
}

}  // namespace

Pose solve_pnp(const TargetBoard& board, std::span<const PixelObservation> observations,
               const CameraIntrinsics& K) {
  if (observations.size() < 4) {
    throw CalibrationError(ErrorCode::kDegenerateConfiguration,
                           "PnP needs at least 4 points, got " + std::to_string(observations.size()));
  }
  std::vector<Vector3> world;
  Vector2List plane;
  Vector2List pixels;
  Vector2List normalized;
  for (const auto& obs : observations) {
    const Vector3& p = board.point(obs.marker_id);
    world.push_back(p);
    plane.emplace_back(p.x(), p.y());
    pixels.push_back(obs.uv());
    normalized.emplace_back((obs.u - K.cx) / K.fx, (obs.v - K.cy) / K.fy);
  }
  if (collinear(plane) || collinear(normalized)) {
    throw CalibrationError(ErrorCode::kDegenerateConfiguration, "points are collinear");
  }

  // Homography plane -> normalized image, DLT on Hartley-normalized points.
  const Matrix3 Ts = normalizing_transform(plane);
  const Matrix3 Td = normalizing_transform(normalized);
  const auto n = static_cast<Eigen::Index>(plane.size());
  Eigen::MatrixXd A(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector3 s = Ts * plane[i].homogeneous();
    const Vector3 d = Td * normalized[i].homogeneous();
    A.row(2 * i) << 0.0, 0.0, 0.0, -s.x(), -s.y(), -1.0, d.y() * s.x(), d.y() * s.y(), d.y();
    A.row(2 * i + 1) << s.x(), s.y(), 1.0, 0.0, 0.0, 0.0, -d.x() * s.x(), -d.x() * s.y(), -d.x();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(7) <= 1e-10 * sv(0)) {
    throw CalibrationError(ErrorCode::kDegenerateConfiguration, "homography DLT is rank deficient");
  }
  const Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);
  const Matrix3 Hn = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(h.data());
  const Matrix3 H = Td.inverse() * Hn * Ts;

  // H ~ [r1 r2 t]
  double scale = 2.0 / (H.col(0).norm() + H.col(1).norm());
  if ((scale * H * plane[0].homogeneous()).z() < 0.0) scale = -scale;
  const Vector3 r1 = scale * H.col(0);
  const Vector3 r2 = scale * H.col(1);
  Matrix3 R;
  R << r1, r2, r1.cross(r2);
  const Pose initial(nearest_rotation(R), scale * H.col(2));

  const Pose cam_from_world = refine_pose(initial, world, pixels, K);
  for (const auto& p : board.points) {
    if (cam_from_world.act(p).z() <= kMinDepth) {
      throw CalibrationError(ErrorCode::kDegenerateConfiguration,
                             "recovered pose places the board behind the camera");
    }
  }
  return cam_from_world.inverse();
}

}  // namespace nbvcalib
