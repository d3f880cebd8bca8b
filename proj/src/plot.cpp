#include "dynba/plot.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <sstream>

#include <Eigen/Geometry>

#include "dynba/error.hpp"

namespace dynba {

namespace {

constexpr double kSize = 480.0;
constexpr double kMargin = 40.0;

// Piecewise-linear approximation of a perceptual blue-green-yellow ramp.
std::string color(double t) {
  static constexpr std::array<std::array<double, 3>, 5> stops = {{{68, 1, 84}, {59, 82, 139}, {33, 145, 140},
                                                                  {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * (stops.size() - 1);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
  const double f = t - static_cast<double>(i);
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(stops[i][0] + f * (stops[i + 1][0] - stops[i][0])),
                static_cast<int>(stops[i][1] + f * (stops[i + 1][1] - stops[i][1])),
                static_cast<int>(stops[i][2] + f * (stops[i + 1][2] - stops[i][2])));
  return buf;
}

Eigen::Vector3d read_vec(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::ParseError, "report: expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

std::string trajectory_svg(const std::vector<Eigen::Vector3d>& estimate, const std::vector<Eigen::Vector3d>& groundtruth,
                           const std::vector<double>& errors) {
  if (groundtruth.empty()) throw Error(ErrorCode::EmptyProblem, "nothing to plot");
  if (estimate.size() != errors.size()) throw Error(ErrorCode::LengthMismatch, "one error per estimated pose required");

  Eigen::Vector3d lo = groundtruth.front(), hi = groundtruth.front();
  for (const auto* set : {&estimate, &groundtruth}) {
    for (const auto& p : *set) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
  Eigen::Vector3d extent = hi - lo;
  int a = 0, b = 2;
  if (extent[1] > std::min(extent[0], extent[2])) (extent[0] < extent[2] ? a : b) = 1;
  if (a > b) std::swap(a, b);
  const double span = std::max({extent[a], extent[b], 1e-9});
  const double scale = (kSize - 2 * kMargin) / span;
  auto x = [&](const Eigen::Vector3d& p) { return kMargin + (p[a] - lo[a]) * scale; };
  auto y = [&](const Eigen::Vector3d& p) { return kSize - kMargin - (p[b] - lo[b]) * scale; };

  const double max_err = errors.empty() ? 0.0 : *std::max_element(errors.begin(), errors.end());
  std::ostringstream svg;
  svg.precision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize + 30
      << "\" viewBox=\"0 0 " << kSize << ' ' << kSize + 30 << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<polyline fill=\"none\" stroke=\"#888888\" stroke-width=\"2\" stroke-dasharray=\"6 4\" points=\"";
  for (const auto& p : groundtruth) svg << x(p) << ',' << y(p) << ' ';
  svg << "\"/>\n";
  for (std::size_t n = 0; n + 1 < estimate.size(); ++n) {
    const double e = 0.5 * (errors[n] + errors[n + 1]);
    svg << "<line x1=\"" << x(estimate[n]) << "\" y1=\"" << y(estimate[n]) << "\" x2=\"" << x(estimate[n + 1])
        << "\" y2=\"" << y(estimate[n + 1]) << "\" stroke=\"" << color(max_err > 0 ? e / max_err : 0.0)
        << "\" stroke-width=\"3\"/>\n";
  }
  for (int s = 0; s < 50; ++s) {
    svg << "<rect x=\"" << kMargin + s * 4 << "\" y=\"" << kSize << "\" width=\"4\" height=\"10\" fill=\""
        << color(s / 49.0) << "\"/>\n";
  }
  svg << "<text x=\"" << kMargin + 210 << "\" y=\"" << kSize + 9
      << "\" font-family=\"sans-serif\" font-size=\"11\">ATE 0 .. " << max_err << "</text>\n";
  svg << "<text x=\"" << kMargin << "\" y=\"" << kMargin / 2
      << "\" font-family=\"sans-serif\" font-size=\"12\">estimate (color) vs ground truth (dashed)</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

std::string report_svg(const nlohmann::json& report) {
  try {
    const auto& align = report.at("ate").at("alignment");
    const auto& q = align.at("rotation_xyzw");
    const Eigen::Quaterniond rot(q.at(3).get<double>(), q.at(0).get<double>(), q.at(1).get<double>(),
                                 q.at(2).get<double>());
    const double s = align.at("scale").get<double>();
    const Eigen::Vector3d t = read_vec(align.at("translation"));
    std::vector<Eigen::Vector3d> est, gt;
    for (const auto& e : report.at("trajectory")) est.push_back(s * (rot * read_vec(e.at("translation"))) + t);
    for (const auto& e : report.at("groundtruth")) gt.push_back(read_vec(e.at("translation")));
    const auto errors = report.at("ate").at("errors").get<std::vector<double>>();
    return trajectory_svg(est, gt, errors);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed report: ") + e.what());
  }
}

}  // namespace dynba
