#include "dynba/lie.hpp"

#include <cmath>
#include <numbers>

#include "dynba/error.hpp"

namespace dynba {

namespace {

constexpr double kSmallAngle = 1e-8;
constexpr double kNearPiMargin = 1e-6;

}  // namespace

Vector6d Twist::vector() const {
  Vector6d v;
  v << rho, phi;
  return v;
}

Twist Twist::from_vector(const Vector6d& v) { return {v.head<3>(), v.tail<3>()}; }

Pose::Pose(const Eigen::Quaterniond& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation.normalized()), translation_(translation) {}

Pose Pose::from_matrix(const Eigen::Matrix4d& m) {
  return {Eigen::Quaterniond(Eigen::Matrix3d(m.topLeftCorner<3, 3>())), m.topRightCorner<3, 1>()};
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_matrix();
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Sim3Transform::Sim3Transform(double scale, const Eigen::Quaterniond& rotation,
                             const Eigen::Vector3d& translation)
    : scale_(scale), rotation_(rotation.normalized()), translation_(translation) {
  if (!(scale > 0.0)) throw Error(ErrorCode::InvalidConfig, "Sim3 scale must be positive");
}

Pose Sim3Transform::apply(const Pose& p) const {
  return {rotation_ * p.rotation(), apply(p.translation())};
}

Sim3Transform Sim3Transform::inverse() const {
  const Eigen::Quaterniond r_inv = rotation_.conjugate();
  return {1.0 / scale_, r_inv, -(r_inv * translation_) / scale_};
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  // clang-format off
  s <<     0, -v.z(),  v.y(),
       v.z(),      0, -v.x(),
      -v.y(),  v.x(),      0;
  // clang-format on
  return s;
}

Eigen::Quaterniond so3_exp_quaternion(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    Eigen::Quaterniond q;
    q.w() = 1.0 - t2 / 8.0;
    q.vec() = (0.5 - t2 / 48.0) * phi;
    return q.normalized();
  }
  const double half = 0.5 * theta;
  Eigen::Quaterniond q;
  q.w() = std::cos(half);
  q.vec() = (std::sin(half) / theta) * phi;
  return q;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& phi) { return so3_exp_quaternion(phi).toRotationMatrix(); }

double rotation_angle(const Eigen::Quaterniond& q) {
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
}

Pose se3_exp(const Twist& xi) {
  const double theta = xi.phi.norm();
  const Eigen::Matrix3d phi_hat = skew(xi.phi);
  const Eigen::Matrix3d phi_hat2 = phi_hat * phi_hat;
  Eigen::Matrix3d v;
  if (theta < kSmallAngle) {
    v = Eigen::Matrix3d::Identity() + 0.5 * phi_hat + phi_hat2 / 6.0;
  } else {
    const double s = std::sin(0.5 * theta);
    const double a = 2.0 * s * s / (theta * theta);
    const double b = (theta - std::sin(theta)) / (theta * theta * theta);
    v = Eigen::Matrix3d::Identity() + a * phi_hat + b * phi_hat2;
  }
  return {so3_exp_quaternion(xi.phi), v * xi.rho};
}

Twist se3_log(const Pose& p) {
  Eigen::Quaterniond q = p.rotation();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const double vec_norm = q.vec().norm();
  const double theta = 2.0 * std::atan2(vec_norm, q.w());
  if (theta > std::numbers::pi - kNearPiMargin) {
    throw Error(ErrorCode::NearPiRotation, "rotation angle " + std::to_string(theta) + " too close to pi");
  }

  Twist xi;
  if (theta < kSmallAngle) {
    // atan(x)/x ~ 1 - x^2/3 with x = |v|/w
    const double x2 = (vec_norm * vec_norm) / (q.w() * q.w());
    xi.phi = (2.0 / q.w()) * (1.0 - x2 / 3.0) * q.vec();
  } else {
    xi.phi = (theta / vec_norm) * q.vec();
  }

  const Eigen::Matrix3d phi_hat = skew(xi.phi);
  double c;
  if (theta < 1e-2) {
    const double t2 = theta * theta;
    c = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    const double half = 0.5 * theta;
    c = (1.0 - half * std::cos(half) / std::sin(half)) / (theta * theta);
  }
  const Eigen::Matrix3d v_inv = Eigen::Matrix3d::Identity() - 0.5 * phi_hat + c * phi_hat * phi_hat;
  xi.rho = v_inv * p.translation();
  return xi;
}

Pose compose(const Pose& a, const Pose& b) {
  return {a.rotation() * b.rotation(), a.rotation() * b.translation() + a.translation()};
}

Pose inverse(const Pose& p) {
  const Eigen::Quaterniond r_inv = p.rotation().conjugate();
  return {r_inv, -(r_inv * p.translation())};
}

Pose relative(const Pose& pose_i, const Pose& pose_j) { return compose(inverse(pose_j), pose_i); }

Pose retract(const Pose& pose, const Vector6d& delta) {
  return compose(se3_exp(Twist::from_vector(delta)), pose);
}

}  // namespace dynba
