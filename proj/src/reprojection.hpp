#pragma once

#include "dynba/flow.hpp"

namespace dynba::detail {

// Per-edge cache of the rotations and translations used by every pixel of one edge.
class EdgeLinearizer {
 public:
  EdgeLinearizer(const Pose& pose_i, const Pose& pose_j, const Intrinsics& k)
      : r_i_(pose_i.rotation_matrix()),
        r_j_t_(pose_j.rotation_matrix().transpose()),
        t_i_(pose_i.translation()),
        t_j_(pose_j.translation()),
        k_(k) {}

  /// Reprojected pixel in frame j; false when invalid.
  bool reproject(const Eigen::Vector2d& pixel, double disparity, Eigen::Vector2d& target) const {
    if (!(disparity > 0.0)) return false;
    const Eigen::Vector3d p_j = r_j_t_ * (r_i_ * backproject(pixel, disparity, k_) + t_i_ - t_j_);
    const Projection proj = project(p_j, k_);
    target = proj.pixel;
    return proj.valid;
  }

  bool linearize(const Eigen::Vector2d& pixel, double disparity, ReprojectionJacobians& out) const {
    if (!(disparity > 0.0)) return false;
    const Eigen::Vector3d x_i = backproject(pixel, disparity, k_);
    const Eigen::Vector3d p_w = r_i_ * x_i + t_i_;
    const Eigen::Vector3d p_j = r_j_t_ * (p_w - t_j_);
    const Projection proj = project(p_j, k_);
    if (!proj.valid) return false;

    const double inv_z = 1.0 / p_j.z();
    Eigen::Matrix<double, 2, 3> d_proj;
    // clang-format off
    d_proj << k_.fx * inv_z, 0.0, -k_.fx * p_j.x() * inv_z * inv_z,
              0.0, k_.fy * inv_z, -k_.fy * p_j.y() * inv_z * inv_z;
    // clang-format on
    const Eigen::Matrix<double, 2, 3> d_world = d_proj * r_j_t_;

    // exp(delta) * pose_i moves the world point by rho + phi x p_w
    out.pose_i.leftCols<3>() = d_world;
    out.pose_i.rightCols<3>() = -d_world * skew(p_w);
    out.pose_j = -out.pose_i;
    out.disparity = d_world * (r_i_ * (-x_i / disparity));
    out.target = proj.pixel;
    return true;
  }

 private:
  Eigen::Matrix3d r_i_;
  Eigen::Matrix3d r_j_t_;
  Eigen::Vector3d t_i_;
  Eigen::Vector3d t_j_;
  Intrinsics k_;
};

}  // namespace dynba::detail
