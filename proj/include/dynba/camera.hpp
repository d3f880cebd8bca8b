#pragma once

#include <Eigen/Core>

#include "dynba/grid.hpp"

namespace dynba {

/// Minimum camera-frame depth for a projection to count as valid.
inline constexpr double kMinDepth = 1e-4;

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  /// Throws InvalidConfig when focal lengths or the principal point are out of range.
  void validate() const;

  /// Intrinsics of the grid obtained by integer downsampling (factor 8 for the BA grid).
  /// Width and height must be multiples of the factor.
  Intrinsics downsampled(int factor) const;

  bool operator==(const Intrinsics&) const = default;
};

struct Projection {
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  double depth = 0.0;
  bool valid = false;
};

/// Lifts a pixel with inverse depth `disparity` to a camera-frame point at depth 1/disparity.
Eigen::Vector3d backproject(const Eigen::Vector2d& pixel, double disparity, const Intrinsics& k);

Projection project(const Eigen::Vector3d& point, const Intrinsics& k);

}  // namespace dynba
