#include <cmath>
#include <numbers>
#include <string>

#include "dynba/error.hpp"
#include "dynba/synth.hpp"

namespace dynba {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

bool finite(const Eigen::Vector3d& v) { return v.allFinite(); }

Pose look_at(const Eigen::Vector3d& center, const Eigen::Vector3d& target) {
  const Eigen::Vector3d forward = target - center;
  const Eigen::Vector3d down = Eigen::Vector3d::UnitY();
  if (forward.norm() < 1e-12 || forward.normalized().cross(down).norm() < 1e-9) {
    throw Error(ErrorCode::InvalidPattern, "look-at direction is degenerate");
  }
  const Eigen::Vector3d z = forward.normalized();
  const Eigen::Vector3d x = down.cross(z).normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return {Eigen::Quaterniond(r), center};
}

Eigen::Vector3d along_waypoints(const std::vector<Eigen::Vector3d>& w, double s) {
  const double segments = static_cast<double>(w.size() - 1);
  const double u = s * segments;
  const auto seg = static_cast<std::size_t>(std::min(std::floor(u), segments - 1.0));
  const double local = u - static_cast<double>(seg);
  if (local == 0.0) return w[seg];
  if (local == 1.0) return w[seg + 1];
  return w[seg] + local * (w[seg + 1] - w[seg]);
}

Eigen::Vector3d target_locked_center(const MotionPattern& p, double s) {
  switch (p.path) {
    case TargetPath::Lateral:
      return p.target + Eigen::Vector3d(p.extent * (s - 0.5), p.height, -p.radius);
    case TargetPath::Vertical:
      return p.target + Eigen::Vector3d(0.0, p.height + p.extent * (s - 0.5), -p.radius);
    case TargetPath::Orbital:
    case TargetPath::Spiral: {
      const bool spiral = p.path == TargetPath::Spiral;
      const double theta = (p.start_degrees + p.arc_degrees * s) * kDegToRad;
      const double r = spiral ? p.radius + (p.radius_end - p.radius) * s : p.radius;
      const double h = spiral ? p.height + p.pitch * s : p.height;
      return p.target + Eigen::Vector3d(r * std::sin(theta), h, -r * std::cos(theta));
    }
  }
  return p.target;
}

}  // namespace

std::string_view to_string(PatternKind kind) {
  switch (kind) {
    case PatternKind::Linear: return "linear";
    case PatternKind::PureRotation: return "pure_rotation";
    case PatternKind::TargetLocked: return "target_locked";
  }
  return "linear";
}

std::string_view to_string(TargetPath path) {
  switch (path) {
    case TargetPath::Lateral: return "lateral";
    case TargetPath::Vertical: return "vertical";
    case TargetPath::Orbital: return "orbital";
    case TargetPath::Spiral: return "spiral";
  }
  return "orbital";
}

PatternKind parse_pattern_kind(std::string_view name) {
  if (name == "linear") return PatternKind::Linear;
  if (name == "pure_rotation") return PatternKind::PureRotation;
  if (name == "target_locked") return PatternKind::TargetLocked;
  throw Error(ErrorCode::InvalidPattern, "unknown motion pattern '" + std::string(name) + "'");
}

TargetPath parse_target_path(std::string_view name) {
  if (name == "lateral") return TargetPath::Lateral;
  if (name == "vertical") return TargetPath::Vertical;
  if (name == "orbital") return TargetPath::Orbital;
  if (name == "spiral") return TargetPath::Spiral;
  throw Error(ErrorCode::InvalidPattern, "unknown target-locked path '" + std::string(name) + "'");
}

void MotionPattern::validate() const {
  switch (kind) {
    case PatternKind::Linear:
      if (waypoints.size() < 2) throw Error(ErrorCode::InvalidPattern, "linear pattern needs at least 2 waypoints");
      for (const auto& w : waypoints) {
        if (!finite(w)) throw Error(ErrorCode::InvalidPattern, "non-finite waypoint");
      }
      if (!finite(orientation)) throw Error(ErrorCode::InvalidPattern, "non-finite orientation");
      break;
    case PatternKind::PureRotation:
      if (!finite(position) || !finite(orientation)) throw Error(ErrorCode::InvalidPattern, "non-finite pose");
      if (!finite(axis) || axis.norm() < 1e-12) throw Error(ErrorCode::InvalidPattern, "rotation axis is zero");
      if (!std::isfinite(sweep_degrees)) throw Error(ErrorCode::InvalidPattern, "non-finite sweep");
      break;
    case PatternKind::TargetLocked:
      if (!finite(target)) throw Error(ErrorCode::InvalidPattern, "non-finite target");
      if (!(radius > 0.0)) throw Error(ErrorCode::InvalidPattern, "radius must be positive");
      if (path == TargetPath::Spiral && !(radius_end > 0.0)) {
        throw Error(ErrorCode::InvalidPattern, "spiral end radius must be positive");
      }
      if (!std::isfinite(height) || !std::isfinite(pitch) || !std::isfinite(extent) ||
          !std::isfinite(start_degrees) || !std::isfinite(arc_degrees)) {
        throw Error(ErrorCode::InvalidPattern, "non-finite target-locked parameter");
      }
      break;
  }
}

std::vector<Pose> gen_trajectory(const MotionPattern& pattern, int n_frames) {
  pattern.validate();
  if (n_frames < 2) throw Error(ErrorCode::InvalidPattern, "at least 2 frames required");

  std::vector<Pose> poses;
  poses.reserve(n_frames);
  const Eigen::Quaterniond base = so3_exp_quaternion(pattern.orientation);
  for (int k = 0; k < n_frames; ++k) {
    const double s = static_cast<double>(k) / (n_frames - 1);
    switch (pattern.kind) {
      case PatternKind::Linear:
        poses.emplace_back(base, along_waypoints(pattern.waypoints, s));
        break;
      case PatternKind::PureRotation: {
        const Eigen::Vector3d phi = pattern.axis.normalized() * (pattern.sweep_degrees * kDegToRad * s);
        poses.emplace_back(so3_exp_quaternion(phi) * base, pattern.position);
        break;
      }
      case PatternKind::TargetLocked:
        poses.push_back(look_at(target_locked_center(pattern, s), pattern.target));
        break;
    }
  }
  return poses;
}

}  // namespace dynba
