#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace dynba {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix26d = Eigen::Matrix<double, 2, 6>;

/// Element of se(3). Ordering in stacked form is (rho, phi).
struct Twist {
  Eigen::Vector3d rho = Eigen::Vector3d::Zero();
  Eigen::Vector3d phi = Eigen::Vector3d::Zero();

  Vector6d vector() const;
  static Twist from_vector(const Vector6d& v);
};

/// Rigid transform, camera-to-world for keyframe poses.
class Pose {
 public:
  Pose() = default;
  Pose(const Eigen::Quaterniond& rotation, const Eigen::Vector3d& translation);

  static Pose identity() { return {}; }
  static Pose from_matrix(const Eigen::Matrix4d& m);

  const Eigen::Quaterniond& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }
  Eigen::Matrix3d rotation_matrix() const { return rotation_.toRotationMatrix(); }
  Eigen::Matrix4d matrix() const;

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }

 private:
  Eigen::Quaterniond rotation_ = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
};

class Sim3Transform {
 public:
  Sim3Transform() = default;
  Sim3Transform(double scale, const Eigen::Quaterniond& rotation, const Eigen::Vector3d& translation);

  double scale() const { return scale_; }
  const Eigen::Quaterniond& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return scale_ * (rotation_ * p) + translation_; }
  /// Maps a camera-to-world pose through the similarity (rotation and center).
  Pose apply(const Pose& p) const;
  Sim3Transform inverse() const;

 private:
  double scale_ = 1.0;
  Eigen::Quaterniond rotation_ = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& phi);
Eigen::Quaterniond so3_exp_quaternion(const Eigen::Vector3d& phi);

Pose se3_exp(const Twist& xi);
/// Throws NearPiRotation when the rotation angle is within 1e-6 of pi.
Twist se3_log(const Pose& p);

Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);
/// inverse(pose_j) * pose_i: maps frame-i camera points into frame j.
Pose relative(const Pose& pose_i, const Pose& pose_j);

/// Left-multiplicative retraction exp(delta) * pose with quaternion renormalization.
Pose retract(const Pose& pose, const Vector6d& delta);

double rotation_angle(const Eigen::Quaterniond& q);

}  // namespace dynba
