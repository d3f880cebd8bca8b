#pragma once

#include "dynba/camera.hpp"
#include "dynba/grid.hpp"
#include "dynba/lie.hpp"

namespace dynba {

/// Per-pixel 3D displacement of the scene point, in frame-j camera coordinates.
using DisplacementField = Grid<Eigen::Vector3d>;

/// Flow of every coarse-grid pixel of frame i into frame j implied by the poses and disp_i.
FlowField induced_flow(const Pose& pose_i, const Pose& pose_j, const DisparityMap& disp_i,
                       const Intrinsics& k);

/// Induced flow with an additional per-pixel displacement of the transformed point.
FlowField induced_flow_dynamic(const Pose& pose_i, const Pose& pose_j, const DisparityMap& disp_i,
                               const DisplacementField& displacement, const Intrinsics& k);

struct ReprojectionJacobians {
  Matrix26d pose_i;
  Matrix26d pose_j;
  Eigen::Vector2d disparity;
  /// Reprojected pixel location in frame j.
  Eigen::Vector2d target;
};

/// Derivatives of the reprojected pixel under left perturbations exp(delta) * pose and
/// under the source disparity. Throws InvalidPixel when the reprojection is invalid.
ReprojectionJacobians reprojection_jacobians(const Pose& pose_i, const Pose& pose_j,
                                             const DisparityMap& disp_i, const Intrinsics& k,
                                             PixelIndex pixel);

ReprojectionJacobians reprojection_jacobians(const Pose& pose_i, const Pose& pose_j,
                                             double disparity, const Intrinsics& k,
                                             const Eigen::Vector2d& pixel);

/// Mean flow magnitude over valid pixels together with the valid fraction.
struct FlowStatistics {
  double mean_magnitude = 0.0;
  double valid_fraction = 0.0;
  std::size_t valid_count = 0;
};

FlowStatistics flow_statistics(const FlowField& flow);

}  // namespace dynba
