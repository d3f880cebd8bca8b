#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include <Eigen/SVD>

#include "dynba/error.hpp"
#include "dynba/eval.hpp"

namespace dynba {

namespace {

constexpr double kCoincidentVariance = 1e-20;

Eigen::Vector3d centroid(const std::vector<Eigen::Vector3d>& pts) {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (const auto& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

}  // namespace

void Trajectory::push_back(double timestamp, const Pose& pose) {
  if (!entries.empty() && !(timestamp > entries.back().timestamp)) {
    throw Error(ErrorCode::InvalidConfig, "trajectory timestamps must strictly increase");
  }
  entries.push_back({timestamp, pose});
}

std::vector<Eigen::Vector3d> Trajectory::positions() const {
  std::vector<Eigen::Vector3d> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.pose.translation());
  return out;
}

void Trajectory::validate() const {
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (!(entries[i].timestamp > entries[i - 1].timestamp)) {
      throw Error(ErrorCode::InvalidConfig, "trajectory timestamps must strictly increase");
    }
  }
}

std::pair<Trajectory, Trajectory> associate(const Trajectory& est, const Trajectory& gt, double max_dt) {
  std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
  for (std::size_t a = 0; a < est.size(); ++a) {
    const double t = est.entries[a].timestamp;
    const auto it = std::lower_bound(gt.entries.begin(), gt.entries.end(), t,
                                     [](const TrajectoryEntry& e, double v) { return e.timestamp < v; });
    const auto idx = static_cast<std::size_t>(it - gt.entries.begin());
    for (std::size_t b : {idx == 0 ? idx : idx - 1, idx}) {
      if (b >= gt.size()) continue;
      const double dt = std::abs(gt.entries[b].timestamp - t);
      if (dt <= max_dt) candidates.emplace_back(dt, a, b);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  std::vector<int> est_match(est.size(), -1);
  std::vector<bool> gt_used(gt.size(), false);
  for (const auto& [dt, a, b] : candidates) {
    if (est_match[a] >= 0 || gt_used[b]) continue;
    est_match[a] = static_cast<int>(b);
    gt_used[b] = true;
  }
  std::pair<Trajectory, Trajectory> out;
  for (std::size_t a = 0; a < est.size(); ++a) {
    if (est_match[a] < 0) continue;
    out.first.entries.push_back(est.entries[a]);
    out.second.entries.push_back(gt.entries[static_cast<std::size_t>(est_match[a])]);
  }
  return out;
}

Sim3Transform umeyama_align(const Trajectory& est, const Trajectory& gt) {
  if (est.size() != gt.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(est.size()) + " vs " + std::to_string(gt.size()));
  }
  if (est.size() < 3) throw Error(ErrorCode::DegenerateGeometry, "similarity alignment needs at least 3 poses");

  const auto x = est.positions();
  const auto y = gt.positions();
  const double n = static_cast<double>(x.size());
  const Eigen::Vector3d mx = centroid(x);
  const Eigen::Vector3d my = centroid(y);

  double var_x = 0.0;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Eigen::Vector3d dx = x[i] - mx;
    var_x += dx.squaredNorm();
    cov += (y[i] - my) * dx.transpose();
  }
  var_x /= n;
  cov /= n;
  if (var_x <= kCoincidentVariance * (1.0 + mx.squaredNorm())) {
    throw Error(ErrorCode::DegenerateGeometry, "estimated positions are coincident");
  }

  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d s = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s.z() = -1.0;
  const Eigen::Matrix3d r = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  const double scale = svd.singularValues().dot(s) / var_x;
  if (!(scale > 0.0)) throw Error(ErrorCode::DegenerateGeometry, "ground-truth positions are coincident");
  return {scale, Eigen::Quaterniond(r), my - scale * (r * mx)};
}

Trajectory apply(const Sim3Transform& s, const Trajectory& t) {
  Trajectory out;
  out.entries.reserve(t.size());
  for (const auto& e : t.entries) out.entries.push_back({e.timestamp, s.apply(e.pose)});
  return out;
}

AteReport ate_rmse(const Trajectory& est_aligned, const Trajectory& gt) {
  if (est_aligned.size() != gt.size()) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(est_aligned.size()) + " vs " + std::to_string(gt.size()) + " poses");
  }
  AteReport r;
  double sq = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double e = (est_aligned.entries[i].pose.translation() - gt.entries[i].pose.translation()).norm();
    r.errors.push_back(e);
    sq += e * e;
  }
  r.rmse = gt.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(gt.size()));
  return r;
}

AteReport evaluate_ate(const Trajectory& est, const Trajectory& gt, double max_dt) {
  const auto [e, g] = associate(est, gt, max_dt);
  if (e.empty()) throw Error(ErrorCode::LengthMismatch, "no poses could be associated by timestamp");
  try {
    const Sim3Transform s = umeyama_align(e, g);
    AteReport r = ate_rmse(apply(s, e), g);
    r.alignment = s;
    r.alignment_mode = "sim3";
    return r;
  } catch (const Error& err) {
    if (err.code() != ErrorCode::DegenerateGeometry) throw;
  }
  const Sim3Transform shift(1.0, Eigen::Quaterniond::Identity(), centroid(g.positions()) - centroid(e.positions()));
  AteReport r = ate_rmse(apply(shift, e), g);
  r.alignment = shift;
  r.alignment_mode = "translation";
  return r;
}

GeodesicError pose_geodesic_error(const Pose& gt_rel, const Pose& pred_rel) {
  const Twist xi = se3_log(compose(gt_rel, inverse(pred_rel)));
  return {xi.rho.norm(), xi.phi.norm()};
}

double camera_loss(const std::vector<Pose>& gt, const std::vector<Pose>& est,
                   const std::vector<std::pair<int, int>>& pairs) {
  if (gt.size() != est.size()) throw Error(ErrorCode::LengthMismatch, "pose lists differ in length");
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [i, j] : pairs) {
    sum += pose_geodesic_error(relative(gt[i], gt[j]), relative(est[i], est[j])).loss();
  }
  return sum / static_cast<double>(pairs.size());
}

}  // namespace dynba
