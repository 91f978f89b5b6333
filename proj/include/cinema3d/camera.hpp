#pragma once

#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace cinema3d {

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
};

/// Rigid world → camera transform: X_cam = rotation * X_world + translation.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }

  /// Camera center in world coordinates.
  Eigen::Vector3d center() const { return -rotation.transpose() * translation; }

  /// Pose of a camera at `center` whose camera-to-world rotation is
  /// `orientation`.
  static Pose from_center(const Eigen::Matrix3d& orientation,
                          const Eigen::Vector3d& center) {
    Pose pose;
    pose.rotation = orientation.transpose();
    pose.translation = -pose.rotation * center;
    return pose;
  }
};

struct Camera {
  Intrinsics intrinsics;
  Pose pose;

  /// Throws ConfigError unless fx, fy > 0 and the rotation is orthonormal
  /// with det = +1 (tolerance 1e-6).
  void validate() const;

  template <typename Derived>
  Eigen::Vector3d to_camera(const Eigen::MatrixBase<Derived>& world) const {
    return pose.rotation * world + pose.translation;
  }
};

/// Principal point at the image center, square pixels.
Camera default_camera(int width, int height, double focal);

/// Back-projects pixel (x, y) at camera-space depth z.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> unproject_pixel(const Intrinsics& k, Scalar x,
                                            Scalar y, Scalar z) {
  return {(x - Scalar(k.cx)) / Scalar(k.fx) * z,
          (y - Scalar(k.cy)) / Scalar(k.fy) * z, z};
}

/// Continuous pixel coordinates of a camera-space point with z > 0.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 2, 1> project_point(
    const Intrinsics& k, const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  return {Scalar(k.fx) * p.x() / p.z() + Scalar(k.cx),
          Scalar(k.fy) * p.y() / p.z() + Scalar(k.cy)};
}

}  // namespace cinema3d
