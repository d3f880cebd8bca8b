#pragma once

// Reference computations that share no code with the library beyond its data types:
// 4x4 matrix exponentials, plain pinhole algebra and finite differences.

#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>
#include <unsupported/Eigen/MatrixFunctions>

#include "dynba/ba.hpp"
#include "dynba/camera.hpp"
#include "dynba/lie.hpp"

namespace oracle {

using Vector6d = Eigen::Matrix<double, 6, 1>;

inline Eigen::Matrix4d hat(const Vector6d& xi) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  const Eigen::Vector3d rho = xi.head<3>(), phi = xi.tail<3>();
  m(0, 1) = -phi.z();
  m(0, 2) = phi.y();
  m(1, 0) = phi.z();
  m(1, 2) = -phi.x();
  m(2, 0) = -phi.y();
  m(2, 1) = phi.x();
  m.block<3, 1>(0, 3) = rho;
  return m;
}

inline Eigen::Matrix4d expm(const Vector6d& xi) { return hat(xi).exp(); }

inline Eigen::Matrix4d matrix(const dynba::Pose& p) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 3>(0, 0) = Eigen::Quaterniond(p.rotation()).normalized().toRotationMatrix();
  m.block<3, 1>(0, 3) = p.translation();
  return m;
}

inline dynba::Pose pose(const Eigen::Matrix4d& m) {
  return dynba::Pose(Eigen::Quaterniond(Eigen::Matrix3d(m.block<3, 3>(0, 0))), m.block<3, 1>(0, 3));
}

/// Target pixel of source pixel (u, v) with disparity d under camera-to-world Ti, Tj.
inline Eigen::Vector2d reproject(const Eigen::Matrix4d& ti, const Eigen::Matrix4d& tj, const Eigen::Vector2d& px,
                                 double d, const dynba::Intrinsics& k) {
  const Eigen::Vector4d x((px.x() - k.cx) / k.fx / d, (px.y() - k.cy) / k.fy / d, 1.0 / d, 1.0);
  const Eigen::Vector4d pj = tj.inverse() * ti * x;
  return {k.fx * pj.x() / pj.z() + k.cx, k.fy * pj.y() / pj.z() + k.cy};
}

struct Jacobians {
  Eigen::Matrix<double, 2, 6> pose_i;
  Eigen::Matrix<double, 2, 6> pose_j;
  Eigen::Vector2d disparity;
};

/// Central differences under left perturbation exp(delta) * T.
inline Jacobians numeric_jacobians(const dynba::Pose& pi, const dynba::Pose& pj, const Eigen::Vector2d& px, double d,
                                   const dynba::Intrinsics& k, double h = 1e-6) {
  const Eigen::Matrix4d ti = matrix(pi), tj = matrix(pj);
  Jacobians jac;
  for (int c = 0; c < 6; ++c) {
    Vector6d e = Vector6d::Zero();
    e[c] = h;
    jac.pose_i.col(c) = (reproject(expm(e) * ti, tj, px, d, k) - reproject(expm(-e) * ti, tj, px, d, k)) / (2 * h);
    jac.pose_j.col(c) = (reproject(ti, expm(e) * tj, px, d, k) - reproject(ti, expm(-e) * tj, px, d, k)) / (2 * h);
  }
  jac.disparity = (reproject(ti, tj, px, d + h, k) - reproject(ti, tj, px, d - h, k)) / (2 * h);
  return jac;
}

inline double relative_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& reference) {
  return (analytic - reference).norm() / std::max(reference.norm(), 1e-6);
}

/// Random pose near identity: rotation up to max_angle, translation up to max_shift per axis.
inline dynba::Pose random_pose(std::mt19937_64& rng, double max_angle, double max_shift) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Vector3d axis(u(rng), u(rng), u(rng));
  axis.normalize();
  const Eigen::AngleAxisd aa(max_angle * std::abs(u(rng)), axis);
  return dynba::Pose(Eigen::Quaterniond(aa), Eigen::Vector3d(u(rng), u(rng), u(rng)) * max_shift);
}

/// Small fully connected BA problem: ground-truth flows plus optional noise, estimates perturbed.
struct RandomProblem {
  dynba::BAProblem problem;
  std::vector<dynba::Pose> truth_poses;
  std::vector<dynba::DisparityMap> truth_disparities;
};

inline RandomProblem random_problem(std::uint64_t seed, int poses, int width, int height, double flow_noise = 0.0,
                                    double pose_noise = 0.02, double disp_noise = 0.02) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  RandomProblem rp;
  dynba::BAProblem& p = rp.problem;
  p.intrinsics = {width * 1.0, width * 1.0, (width - 1) / 2.0, (height - 1) / 2.0, width, height};
  for (int m = 0; m < poses; ++m) {
    rp.truth_poses.push_back(m == 0 ? dynba::Pose::identity() : random_pose(rng, 0.05, 0.15));
    dynba::DisparityMap d(width, height);
    for (auto& v : d.values()) v = 1.0 / (2.0 + 2.0 * u(rng));
    rp.truth_disparities.push_back(d);
  }
  for (int i = 0; i < poses; ++i) {
    for (int j = 0; j < poses; ++j) {
      if (i == j) continue;
      dynba::EdgeObservation e;
      e.src = i;
      e.dst = j;
      e.flow_pred = dynba::FlowField(width, height);
      e.confidence = dynba::VectorGrid(width, height, Eigen::Vector2d::Zero());
      e.mask = dynba::ScalarGrid(width, height, 1.0);
      const Eigen::Matrix4d ti = matrix(rp.truth_poses[i]), tj = matrix(rp.truth_poses[j]);
      for (std::size_t q = 0; q < e.flow_pred.vectors.size(); ++q) {
        const dynba::PixelIndex px = e.flow_pred.vectors.pixel(q);
        const Eigen::Vector2d src(px.x, px.y);
        const Eigen::Vector2d f = reproject(ti, tj, src, rp.truth_disparities[i][q], p.intrinsics) - src;
        e.flow_pred.vectors[q] = f + flow_noise * Eigen::Vector2d(n(rng), n(rng));
        e.flow_pred.valid[q] = 1;
        e.confidence[q] = Eigen::Vector2d(0.5 + 0.5 * u(rng), 0.5 + 0.5 * u(rng));
      }
      p.edges.push_back(std::move(e));
    }
  }
  for (int m = 0; m < poses; ++m) {
    const Eigen::Matrix4d noise = expm((Vector6d() << n(rng), n(rng), n(rng), n(rng), n(rng), n(rng)).finished() *
                                       (m == 0 ? 0.0 : pose_noise));
    p.poses.push_back(pose(noise * matrix(rp.truth_poses[m])));
    dynba::DisparityMap d = rp.truth_disparities[m];
    for (auto& v : d.values()) v *= 1.0 + disp_noise * n(rng);
    p.disparities.push_back(d);
  }
  return rp;
}

/// Reprojection validity per edge and pixel at the given state: in front of the camera and
/// inside the image.
inline std::vector<std::vector<bool>> validity(const dynba::BAProblem& p) {
  const dynba::Intrinsics& k = p.intrinsics;
  std::vector<std::vector<bool>> valid;
  for (const auto& e : p.edges) {
    const Eigen::Matrix4d rel = matrix(p.poses[e.dst]).inverse() * matrix(p.poses[e.src]);
    std::vector<bool> v(k.width * k.height);
    for (std::size_t q = 0; q < v.size(); ++q) {
      const dynba::PixelIndex px = p.disparities[e.src].pixel(q);
      const double d = p.disparities[e.src][q];
      const Eigen::Vector4d pj = rel * Eigen::Vector4d((px.x - k.cx) / k.fx / d, (px.y - k.cy) / k.fy / d, 1.0 / d, 1.0);
      const double u = k.fx * pj.x() / pj.z() + k.cx, w = k.fy * pj.y() / pj.z() + k.cy;
      v[q] = pj.z() > dynba::kMinDepth && u >= 0 && u < k.width && w >= 0 && w < k.height;
    }
    valid.push_back(std::move(v));
  }
  return valid;
}

/// Stacked weighted residual sqrt(w) * (f_pred - f_induced) over all edges and pixels valid
/// in `valid`; for finite-difference normal equations.
inline Eigen::VectorXd whitened_residuals(const dynba::BAProblem& p, const std::vector<Eigen::Matrix4d>& t,
                                          const std::vector<dynba::DisparityMap>& d,
                                          const std::vector<std::vector<bool>>& valid) {
  const int pixels = p.intrinsics.width * p.intrinsics.height;
  Eigen::VectorXd r = Eigen::VectorXd::Zero(2 * pixels * static_cast<int>(p.edges.size()));
  int row = 0;
  for (std::size_t ei = 0; ei < p.edges.size(); ++ei) {
    const auto& e = p.edges[ei];
    for (int q = 0; q < pixels; ++q, row += 2) {
      if (!valid[ei][q] || !e.flow_pred.is_valid(q)) continue;
      const dynba::PixelIndex px = d[e.src].pixel(q);
      const Eigen::Vector2d src(px.x, px.y);
      const Eigen::Vector2d res = e.flow_pred.vectors[q] - (reproject(t[e.src], t[e.dst], src, d[e.src][q], p.intrinsics) - src);
      const Eigen::Vector2d w = e.confidence[q] * e.mask[q];
      r[row] = std::sqrt(w.x()) * res.x();
      r[row + 1] = std::sqrt(w.y()) * res.y();
    }
  }
  return r;
}

/// Undamped J^T W J and J^T W r by central differences over (left pose twists, disparities).
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> numeric_normal_equations(const dynba::BAProblem& p, double h = 1e-6) {
  const int n = static_cast<int>(p.size());
  const int pixels = p.intrinsics.width * p.intrinsics.height;
  std::vector<Eigen::Matrix4d> t;
  for (const auto& pose : p.poses) t.push_back(matrix(pose));
  const auto valid = validity(p);
  const Eigen::VectorXd r0 = whitened_residuals(p, t, p.disparities, valid);
  const int dim = 6 * n + pixels * n;
  Eigen::MatrixXd j(r0.size(), dim);
  for (int c = 0; c < dim; ++c) {
    auto tp = t, tm = t;
    auto dp = p.disparities, dm = p.disparities;
    if (c < 6 * n) {
      Vector6d e = Vector6d::Zero();
      e[c % 6] = h;
      tp[c / 6] = expm(e) * t[c / 6];
      tm[c / 6] = expm(-e) * t[c / 6];
    } else {
      const int f = (c - 6 * n) / pixels, q = (c - 6 * n) % pixels;
      dp[f][q] += h;
      dm[f][q] -= h;
    }
    // Residual is f_pred - f_induced, so d(residual) = -d(reprojection).
    j.col(c) = -(whitened_residuals(p, tp, dp, valid) - whitened_residuals(p, tm, dm, valid)) / (2 * h);
  }
  return {j.transpose() * j, j.transpose() * r0};
}

/// Plain LU solve of the full damped system, with fixed pose rows pinned to zero.
inline Eigen::VectorXd dense_solve(Eigen::MatrixXd h, Eigen::VectorXd g, const std::vector<bool>& fixed) {
  for (std::size_t m = 0; m < fixed.size(); ++m) {
    if (!fixed[m]) continue;
    const int r = 6 * static_cast<int>(m);
    h.middleRows(r, 6).setZero();
    h.middleCols(r, 6).setZero();
    h.block(r, r, 6, 6).setIdentity();
    g.segment(r, 6).setZero();
  }
  return h.fullPivLu().solve(g);
}

}  // namespace oracle
