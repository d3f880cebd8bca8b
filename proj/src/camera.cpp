#include "dynba/camera.hpp"

#include <string>

#include "dynba/error.hpp"

namespace dynba {

namespace {

// Border pixels come back a few ulps negative after a backproject/project roundtrip.
constexpr double kBorderSlack = 1e-9;

}  // namespace

void Intrinsics::validate() const {
  if (!(fx > 0.0 && fy > 0.0)) throw Error(ErrorCode::InvalidConfig, "focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidConfig, "grid dimensions must be positive");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw Error(ErrorCode::InvalidConfig, "principal point outside the image");
  }
}

Intrinsics Intrinsics::downsampled(int factor) const {
  if (factor <= 0 || width % factor != 0 || height % factor != 0) {
    throw Error(ErrorCode::InvalidConfig, "image size " + std::to_string(width) + "x" + std::to_string(height) +
                                              " is not a multiple of " + std::to_string(factor));
  }
  const double s = 1.0 / factor;
  return {fx * s, fy * s, cx * s, cy * s, width / factor, height / factor};
}

Eigen::Vector3d backproject(const Eigen::Vector2d& pixel, double disparity, const Intrinsics& k) {
  if (!(disparity > 0.0)) throw Error(ErrorCode::NonPositiveDisparity, "disparity " + std::to_string(disparity));
  const double z = 1.0 / disparity;
  return {(pixel.x() - k.cx) / k.fx * z, (pixel.y() - k.cy) / k.fy * z, z};
}

Projection project(const Eigen::Vector3d& point, const Intrinsics& k) {
  Projection out;
  out.depth = point.z();
  if (!(point.z() > kMinDepth)) return out;
  out.pixel = {k.fx * point.x() / point.z() + k.cx, k.fy * point.y() / point.z() + k.cy};
  out.valid = out.pixel.x() >= -kBorderSlack && out.pixel.x() < k.width && out.pixel.y() >= -kBorderSlack &&
              out.pixel.y() < k.height;
  return out;
}

}  // namespace dynba
