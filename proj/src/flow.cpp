#include "dynba/flow.hpp"

#include "dynba/error.hpp"
#include "reprojection.hpp"

namespace dynba {

namespace {

template <typename Displace>
FlowField reproject_grid(const Pose& pose_i, const Pose& pose_j, const DisparityMap& disp_i, const Intrinsics& k,
                         Displace&& displace) {
  if (disp_i.width() != k.width || disp_i.height() != k.height) {
    throw Error(ErrorCode::ShapeMismatch, "disparity grid does not match intrinsics");
  }
  const Pose rel = relative(pose_i, pose_j);
  const Eigen::Matrix3d r = rel.rotation_matrix();
  const Eigen::Vector3d& t = rel.translation();

  FlowField flow(k.width, k.height);
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      const std::size_t i = disp_i.index(x, y);
      const double d = disp_i[i];
      if (!(d > 0.0)) continue;
      const Eigen::Vector2d p(x, y);
      const Eigen::Vector3d point = displace(i, Eigen::Vector3d(r * backproject(p, d, k) + t));
      const Projection proj = project(point, k);
      if (!proj.valid) continue;
      flow.vectors[i] = proj.pixel - p;
      flow.valid[i] = 1;
    }
  }
  return flow;
}

}  // namespace

FlowField induced_flow(const Pose& pose_i, const Pose& pose_j, const DisparityMap& disp_i, const Intrinsics& k) {
  return reproject_grid(pose_i, pose_j, disp_i, k, [](std::size_t, const Eigen::Vector3d& p) { return p; });
}

FlowField induced_flow_dynamic(const Pose& pose_i, const Pose& pose_j, const DisparityMap& disp_i,
                               const DisplacementField& displacement, const Intrinsics& k) {
  if (!displacement.same_shape(disp_i)) {
    throw Error(ErrorCode::ShapeMismatch, "displacement field does not match disparity grid");
  }
  return reproject_grid(pose_i, pose_j, disp_i, k, [&](std::size_t i, const Eigen::Vector3d& p) {
    return Eigen::Vector3d(p + displacement[i]);
  });
}

ReprojectionJacobians reprojection_jacobians(const Pose& pose_i, const Pose& pose_j, double disparity,
                                             const Intrinsics& k, const Eigen::Vector2d& pixel) {
  if (!(disparity > 0.0)) throw Error(ErrorCode::NonPositiveDisparity, "source disparity must be positive");
  ReprojectionJacobians j;
  if (!detail::EdgeLinearizer(pose_i, pose_j, k).linearize(pixel, disparity, j)) {
    throw Error(ErrorCode::InvalidPixel, "reprojection leaves the image or the view frustum");
  }
  return j;
}

ReprojectionJacobians reprojection_jacobians(const Pose& pose_i, const Pose& pose_j, const DisparityMap& disp_i,
                                             const Intrinsics& k, PixelIndex pixel) {
  if (pixel.x < 0 || pixel.y < 0 || pixel.x >= disp_i.width() || pixel.y >= disp_i.height()) {
    throw Error(ErrorCode::InvalidPixel, "pixel outside the disparity grid");
  }
  return reprojection_jacobians(pose_i, pose_j, disp_i.at(pixel.x, pixel.y), k,
                                Eigen::Vector2d(pixel.x, pixel.y));
}

FlowStatistics flow_statistics(const FlowField& flow) {
  FlowStatistics s;
  double sum = 0.0;
  for (std::size_t i = 0; i < flow.vectors.size(); ++i) {
    if (!flow.is_valid(i)) continue;
    sum += flow.vectors[i].norm();
    ++s.valid_count;
  }
  if (s.valid_count > 0) s.mean_magnitude = sum / static_cast<double>(s.valid_count);
  if (!flow.vectors.empty()) s.valid_fraction = static_cast<double>(s.valid_count) / flow.vectors.size();
  return s;
}

}  // namespace dynba
