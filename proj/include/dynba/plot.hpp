#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace dynba {

/// Top-down SVG of an aligned estimate over ground truth, estimate segments colored by
/// per-pose translational error. Projects onto the two axes with the largest gt extent.
std::string trajectory_svg(const std::vector<Eigen::Vector3d>& estimate, const std::vector<Eigen::Vector3d>& groundtruth,
                           const std::vector<double>& errors);

/// Same figure from a run report document; the estimate is mapped through the stored alignment.
std::string report_svg(const nlohmann::json& report);

}  // namespace dynba
