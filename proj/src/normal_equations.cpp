#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "dynba/ba.hpp"
#include "dynba/error.hpp"
#include "reprojection.hpp"

namespace dynba {

namespace {

using Matrix6d = Eigen::Matrix<double, 6, 6>;

std::vector<bool> fixed_pose_flags(const BAProblem& problem, const SolverConfig& config) {
  std::vector<bool> fixed(problem.size(), false);
  if (!problem.fixed.empty()) {
    for (std::size_t i = 0; i < fixed.size(); ++i) fixed[i] = problem.fixed[i];
  }
  if (config.fix_first_pose && !fixed.empty()) fixed[0] = true;
  return fixed;
}

bool depth_term_active(const BAProblem& problem, const SolverConfig& config) {
  return config.depth_weight > 0.0 && problem.has_depth_priors();
}

// Channel weight after the optional Huber reweighting.
double robust_weight(double w, double r, const SolverConfig& config) {
  if (config.huber_off || w == 0.0) return w;
  const double a = std::abs(r);
  return a <= config.huber_delta ? w : w * config.huber_delta / a;
}

double robust_cost(double w, double r, const SolverConfig& config) {
  const double a = std::abs(r);
  if (config.huber_off || a <= config.huber_delta) return w * r * r;
  return w * (2.0 * config.huber_delta * a - config.huber_delta * config.huber_delta);
}

double prior_disparity(const DepthMap& depth, std::size_t p) {
  const double d = depth[p];
  return d > 0.0 ? 1.0 / d : 0.0;
}

}  // namespace

void EdgeObservation::validate(int width, int height) const {
  if (flow_pred.width() != width || flow_pred.height() != height || confidence.width() != width ||
      confidence.height() != height || mask.width() != width || mask.height() != height) {
    throw Error(ErrorCode::ShapeMismatch, "edge " + std::to_string(src) + "->" + std::to_string(dst) +
                                              " grids do not match the disparity shape");
  }
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!(mask[i] >= 0.0 && mask[i] <= 1.0)) throw Error(ErrorCode::InvalidConfig, "mask value outside [0,1]");
    if (!(confidence[i].minCoeff() >= 0.0)) throw Error(ErrorCode::InvalidConfig, "negative confidence");
  }
}

void SolverConfig::validate() const {
  if (gn_iterations < 0) throw Error(ErrorCode::InvalidConfig, "gn_iterations must be >= 0");
  if (!(damping >= 0.0)) throw Error(ErrorCode::InvalidConfig, "damping must be >= 0");
  if (!(depth_weight >= 0.0)) throw Error(ErrorCode::InvalidConfig, "depth_weight must be >= 0");
  if (!huber_off && !(huber_delta > 0.0)) throw Error(ErrorCode::InvalidConfig, "huber_delta must be > 0");
}

bool BAProblem::has_depth_priors() const {
  return std::any_of(depth_priors.begin(), depth_priors.end(), [](const auto& d) { return d.has_value(); });
}

void BAProblem::validate() const {
  const std::size_t n = poses.size();
  if (disparities.size() != n) throw Error(ErrorCode::ShapeMismatch, "one disparity map per pose required");
  if (!depth_priors.empty() && depth_priors.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "depth priors must be empty or one per pose");
  }
  if (!fixed.empty() && fixed.size() != n) throw Error(ErrorCode::ShapeMismatch, "fixed flags must match poses");
  for (const auto& d : disparities) {
    if (d.width() != intrinsics.width || d.height() != intrinsics.height) {
      throw Error(ErrorCode::ShapeMismatch, "disparity grid does not match intrinsics");
    }
  }
  for (const auto& prior : depth_priors) {
    if (prior && !prior->same_shape(disparities.front())) {
      throw Error(ErrorCode::ShapeMismatch, "depth prior grid does not match disparity grid");
    }
  }
  for (const auto& e : edges) {
    if (e.src < 0 || e.dst < 0 || e.src >= static_cast<int>(n) || e.dst >= static_cast<int>(n) || e.src == e.dst) {
      throw Error(ErrorCode::UnknownKeyframe, "edge endpoint outside the problem");
    }
    e.validate(intrinsics.width, intrinsics.height);
  }
}

WeightedResiduals weighted_residuals(const EdgeObservation& edge, const BAProblem& problem,
                                     const SolverConfig& config) {
  const Intrinsics& k = problem.intrinsics;
  if (edge.src < 0 || edge.dst < 0 || edge.src >= static_cast<int>(problem.size()) ||
      edge.dst >= static_cast<int>(problem.size())) {
    throw Error(ErrorCode::UnknownKeyframe, "edge endpoint outside the problem");
  }
  edge.validate(k.width, k.height);
  const DisparityMap& disp = problem.disparities[edge.src];
  if (disp.width() != k.width || disp.height() != k.height) {
    throw Error(ErrorCode::ShapeMismatch, "disparity grid does not match intrinsics");
  }

  WeightedResiduals out{VectorGrid(k.width, k.height, Eigen::Vector2d::Zero()),
                        VectorGrid(k.width, k.height, Eigen::Vector2d::Zero()),
                        Grid<unsigned char>(k.width, k.height, 0)};
  const detail::EdgeLinearizer lin(problem.poses[edge.src], problem.poses[edge.dst], k);
  for (std::size_t p = 0; p < disp.size(); ++p) {
    const PixelIndex px = disp.pixel(p);
    const Eigen::Vector2d source(px.x, px.y);
    Eigen::Vector2d target;
    if (!lin.reproject(source, disp[p], target)) continue;
    out.valid[p] = 1;
    const Eigen::Vector2d r = edge.flow_pred.vectors[p] - (target - source);
    out.residuals[p] = r;
    if (!edge.flow_pred.is_valid(p)) continue;
    const Eigen::Vector2d w = edge.confidence[p] * edge.mask[p];
    out.weights[p] = {robust_weight(w.x(), r.x(), config), robust_weight(w.y(), r.y(), config)};
  }
  return out;
}

double reprojection_cost(const BAProblem& problem, const SolverConfig& config) {
  double cost = 0.0;
  for (const auto& edge : problem.edges) {
    const WeightedResiduals wr = weighted_residuals(edge, problem, config);
    for (std::size_t p = 0; p < wr.residuals.size(); ++p) {
      if (!wr.valid[p] || !edge.flow_pred.is_valid(p)) continue;
      const Eigen::Vector2d w = edge.confidence[p] * edge.mask[p];
      cost += robust_cost(w.x(), wr.residuals[p].x(), config) + robust_cost(w.y(), wr.residuals[p].y(), config);
    }
  }
  return cost;
}

double ba_cost(const BAProblem& problem, const SolverConfig& config) {
  double cost = reprojection_cost(problem, config);
  if (!depth_term_active(problem, config)) return cost;
  double prior = 0.0;
  for (std::size_t k = 0; k < problem.size(); ++k) {
    if (!problem.depth_priors[k]) continue;
    const DepthMap& depth = *problem.depth_priors[k];
    for (std::size_t p = 0; p < depth.size(); ++p) {
      if (!(depth[p] > 0.0)) continue;
      const double e = problem.disparities[k][p] - prior_disparity(depth, p);
      prior += e * e;
    }
  }
  return cost + config.depth_weight * prior;
}

int NormalEquations::total_dim() const {
  return pose_dim() + static_cast<int>(disparity_diagonal.size()) * pixels_per_frame;
}

Eigen::MatrixXd NormalEquations::dense_matrix() const {
  const int np = pose_dim();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(total_dim(), total_dim());
  h.topLeftCorner(np, np) = pose_block;
  for (std::size_t f = 0; f < disparity_diagonal.size(); ++f) {
    const int off = np + static_cast<int>(f) * pixels_per_frame;
    h.block(off, off, pixels_per_frame, pixels_per_frame) = disparity_diagonal[f].asDiagonal();
  }
  for (const auto& blk : coupling) {
    const int off = np + blk.frame * pixels_per_frame;
    h.block(blk.row, off, blk.rows, pixels_per_frame) = blk.values;
    h.block(off, blk.row, pixels_per_frame, blk.rows) = blk.values.transpose();
  }
  return h;
}

Eigen::VectorXd NormalEquations::dense_gradient() const {
  Eigen::VectorXd g(total_dim());
  g.head(pose_dim()) = pose_gradient;
  for (std::size_t f = 0; f < disparity_gradient.size(); ++f) {
    g.segment(pose_dim() + static_cast<int>(f) * pixels_per_frame, pixels_per_frame) = disparity_gradient[f];
  }
  return g;
}

NormalEquations assemble_normal_equations(const BAProblem& problem, const SolverConfig& config) {
  problem.validate();
  config.validate();
  if (problem.edges.empty()) throw Error(ErrorCode::EmptyProblem, "no edges in the problem");

  const int n = static_cast<int>(problem.size());
  const Intrinsics& k = problem.intrinsics;
  const int pixels = k.width * k.height;
  const std::vector<bool> fixed = fixed_pose_flags(problem, config);
  const bool depth_active = depth_term_active(problem, config);
  const auto fixed_count = std::count(fixed.begin(), fixed.end(), true);

  NormalEquations ne;
  ne.num_poses = n;
  ne.pixels_per_frame = pixels;
  ne.fixed_poses = fixed;
  ne.scale_constraint = !depth_active && fixed_count <= 1;
  const int pose_dim = 6 * n + (ne.scale_constraint ? 1 : 0);
  ne.pose_block = Eigen::MatrixXd::Zero(pose_dim, pose_dim);
  ne.pose_gradient = Eigen::VectorXd::Zero(pose_dim);
  ne.disparity_diagonal.assign(n, Eigen::VectorXd::Zero(pixels));
  ne.disparity_gradient.assign(n, Eigen::VectorXd::Zero(pixels));

  std::map<std::pair<int, int>, std::size_t> coupling_index;
  auto coupling_block = [&](int pose, int frame) -> Eigen::MatrixXd& {
    const auto key = std::make_pair(pose, frame);
    auto it = coupling_index.find(key);
    if (it == coupling_index.end()) {
      it = coupling_index.emplace(key, ne.coupling.size()).first;
      ne.coupling.push_back({6 * pose, 6, frame, Eigen::MatrixXd::Zero(6, pixels)});
    }
    return ne.coupling[it->second].values;
  };

  // J_pose_j = -J_pose_i, so one 6x6 block per edge determines all four pose blocks.
  std::size_t valid_pixels = 0;
  Eigen::Matrix<double, 6, Eigen::Dynamic> edge_coupling(6, pixels);
  for (const auto& edge : problem.edges) {
    const int i = edge.src;
    const int j = edge.dst;
    const DisparityMap& disp = problem.disparities[i];
    const detail::EdgeLinearizer lin(problem.poses[i], problem.poses[j], k);

    Matrix6d h = Matrix6d::Zero();
    Vector6d g = Vector6d::Zero();
    edge_coupling.setZero();
    bool contributes = false;

    ReprojectionJacobians jac;
    for (int p = 0; p < pixels; ++p) {
      const PixelIndex px = disp.pixel(p);
      const Eigen::Vector2d source(px.x, px.y);
      if (!lin.linearize(source, disp[p], jac)) continue;
      ++valid_pixels;
      if (!edge.flow_pred.is_valid(p)) continue;
      const Eigen::Vector2d r = edge.flow_pred.vectors[p] - (jac.target - source);
      const Eigen::Vector2d w0 = edge.confidence[p] * edge.mask[p];
      const Eigen::Vector2d w(robust_weight(w0.x(), r.x(), config), robust_weight(w0.y(), r.y(), config));
      if (w.x() == 0.0 && w.y() == 0.0) continue;
      contributes = true;

      const Eigen::Matrix<double, 6, 2> jt_w = jac.pose_i.transpose() * w.asDiagonal();
      h.noalias() += jt_w * jac.pose_i;
      g.noalias() += jt_w * r;
      edge_coupling.col(p).noalias() = jt_w * jac.disparity;
      const Eigen::Vector2d wd = w.cwiseProduct(jac.disparity);
      ne.disparity_diagonal[i][p] += wd.dot(jac.disparity);
      ne.disparity_gradient[i][p] += wd.dot(r);
    }
    if (!contributes) continue;

    ne.pose_gradient.segment<6>(6 * i) += g;
    ne.pose_gradient.segment<6>(6 * j) -= g;
    ne.pose_block.block<6, 6>(6 * i, 6 * i) += h;
    ne.pose_block.block<6, 6>(6 * j, 6 * j) += h;
    ne.pose_block.block<6, 6>(6 * i, 6 * j) -= h;
    ne.pose_block.block<6, 6>(6 * j, 6 * i) -= h;
    coupling_block(i, i) += edge_coupling;
    coupling_block(j, i) -= edge_coupling;
  }
  if (valid_pixels == 0) throw Error(ErrorCode::EmptyProblem, "no edge has a valid reprojected pixel");

  // Observed pixels of the frame carrying the scale gauge; unobserved ones would satisfy the
  // constraint at no cost and leave the scale free.
  int gauge_frame = -1;
  std::vector<int> gauge_pixels;
  for (int f = 0; f < n && gauge_frame < 0; ++f) {
    for (int p = 0; p < pixels; ++p) {
      if (ne.disparity_diagonal[f][p] > 0.0) gauge_pixels.push_back(p);
    }
    if (!gauge_pixels.empty()) gauge_frame = f;
  }
  if (ne.scale_constraint && gauge_frame < 0) {
    ne.scale_constraint = false;
    ne.pose_block.conservativeResize(6 * n, 6 * n);
    ne.pose_gradient.conservativeResize(6 * n);
  }

  for (int f = 0; f < n; ++f) {
    ne.disparity_diagonal[f].array() += config.damping;
    if (!depth_active || !problem.depth_priors[f]) continue;
    const DepthMap& depth = *problem.depth_priors[f];
    for (int p = 0; p < pixels; ++p) {
      if (!(depth[p] > 0.0)) continue;
      ne.disparity_diagonal[f][p] += config.depth_weight;
      ne.disparity_gradient[f][p] -= config.depth_weight * (problem.disparities[f][p] - prior_disparity(depth, p));
    }
  }

  for (int m = 0; m < n; ++m) {
    if (fixed[m]) {
      ne.pose_block.middleRows(6 * m, 6).setZero();
      ne.pose_block.middleCols(6 * m, 6).setZero();
      ne.pose_block.block<6, 6>(6 * m, 6 * m).setIdentity();
      ne.pose_gradient.segment<6>(6 * m).setZero();
    } else {
      ne.pose_block.block<6, 6>(6 * m, 6 * m).diagonal().array() += config.damping;
    }
  }
  std::erase_if(ne.coupling, [&](const CouplingBlock& b) { return fixed[b.row / 6]; });

  if (ne.scale_constraint) {
    // d(mean log d) = mean(dd / d) over the observed gauge pixels; the multiplier row holds it at zero
    CouplingBlock row{6 * n, 1, gauge_frame, Eigen::MatrixXd::Zero(1, pixels)};
    const DisparityMap& d0 = problem.disparities[gauge_frame];
    const double m = static_cast<double>(gauge_pixels.size());
    for (const int p : gauge_pixels) row.values(0, p) = 1.0 / (d0[p] * m);
    ne.coupling.push_back(std::move(row));
  }
  return ne;
}

}  // namespace dynba
