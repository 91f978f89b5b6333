#include "cinema3d/camera.hpp"

#include <string>

#include "cinema3d/errors.hpp"

namespace cinema3d {

void Camera::validate() const {
  if (!(intrinsics.fx > 0.0) || !(intrinsics.fy > 0.0)) {
    throw ConfigError("camera focal lengths must be positive");
  }
  if (!std::isfinite(intrinsics.cx) || !std::isfinite(intrinsics.cy)) {
    throw ConfigError("camera principal point must be finite");
  }
  const Eigen::Matrix3d& r = pose.rotation;
  const double orthogonality =
      (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!(orthogonality <= 1e-6) || !(std::abs(r.determinant() - 1.0) <= 1e-6)) {
    throw ConfigError("camera rotation is not orthonormal (error " +
                      std::to_string(orthogonality) + ")");
  }
  if (!pose.translation.allFinite()) {
    throw ConfigError("camera translation must be finite");
  }
}

Camera default_camera(int width, int height, double focal) {
  Camera camera;
  camera.intrinsics = {focal, focal, 0.5 * (width - 1), 0.5 * (height - 1)};
  return camera;
}

}  // namespace cinema3d
