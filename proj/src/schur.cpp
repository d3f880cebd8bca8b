#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/LU>

#include "dynba/ba.hpp"
#include "dynba/error.hpp"

namespace dynba {

namespace {

// Relative pivot threshold below which a system is reported singular.
constexpr double kRankThreshold = 1e-12;
constexpr int kMaxDenseDim = 2000;

// Jacobi-equilibrated before factoring: rotation and translation rows differ by orders of
// magnitude, which would otherwise trip the relative pivot test on well-posed systems.
Eigen::VectorXd solve_checked(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const char* what) {
  Eigen::VectorXd scale(a.rows());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const double d = std::abs(a(r, r));
    scale[r] = d > 0.0 ? 1.0 / std::sqrt(d) : 1.0;
  }
  const Eigen::MatrixXd scaled = scale.asDiagonal() * a * scale.asDiagonal();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(scaled);
  lu.setThreshold(kRankThreshold);
  if (lu.rank() < a.rows()) {
    throw Error(ErrorCode::SingularSystem, std::string(what) + " has rank " + std::to_string(lu.rank()) + " < " +
                                               std::to_string(a.rows()));
  }
  return scale.cwiseProduct(lu.solve(scale.cwiseProduct(b)));
}

BAUpdate split_update(const NormalEquations& system, const Eigen::VectorXd& pose_part,
                      std::vector<Eigen::VectorXd> disparities) {
  BAUpdate u;
  u.poses.resize(system.num_poses);
  for (int m = 0; m < system.num_poses; ++m) u.poses[m] = Twist::from_vector(pose_part.segment<6>(6 * m));
  u.disparities = std::move(disparities);
  return u;
}

}  // namespace

Eigen::VectorXd BAUpdate::stacked() const {
  Eigen::Index dim = 6 * static_cast<Eigen::Index>(poses.size());
  for (const auto& d : disparities) dim += d.size();
  Eigen::VectorXd v(dim);
  Eigen::Index off = 0;
  for (const auto& t : poses) {
    v.segment<6>(off) = t.vector();
    off += 6;
  }
  for (const auto& d : disparities) {
    v.segment(off, d.size()) = d;
    off += d.size();
  }
  return v;
}

BAUpdate schur_solve(const NormalEquations& system) {
  const int frames = static_cast<int>(system.disparity_diagonal.size());
  std::vector<Eigen::VectorXd> c_inv(frames);
  for (int f = 0; f < frames; ++f) {
    const Eigen::VectorXd& c = system.disparity_diagonal[f];
    if (!(c.minCoeff() > 0.0)) {
      throw Error(ErrorCode::SingularSystem, "disparity block of frame " + std::to_string(f) + " is not positive");
    }
    c_inv[f] = c.cwiseInverse();
  }

  // Coupling blocks grouped by disparity frame, in row order for a fixed reduction order.
  std::vector<std::vector<const CouplingBlock*>> by_frame(frames);
  for (const auto& blk : system.coupling) by_frame[blk.frame].push_back(&blk);
  for (auto& blocks : by_frame) {
    std::sort(blocks.begin(), blocks.end(), [](const auto* a, const auto* b) { return a->row < b->row; });
  }

  Eigen::MatrixXd reduced = system.pose_block;
  Eigen::VectorXd rhs = system.pose_gradient;
  for (int f = 0; f < frames; ++f) {
    const auto& blocks = by_frame[f];
    if (blocks.empty()) continue;
    // One product per frame: stacked E_f C_f^{-1/2} times its transpose.
    int rows = 0;
    for (const CouplingBlock* a : blocks) rows += a->rows;
    Eigen::MatrixXd scaled(rows, system.pixels_per_frame);
    const Eigen::VectorXd root = c_inv[f].cwiseSqrt();
    const Eigen::VectorXd cg = c_inv[f].cwiseProduct(system.disparity_gradient[f]);
    int off = 0;
    for (const CouplingBlock* a : blocks) {
      scaled.middleRows(off, a->rows) = a->values * root.asDiagonal();
      rhs.segment(a->row, a->rows).noalias() -= a->values * cg;
      off += a->rows;
    }
    Eigen::MatrixXd product = Eigen::MatrixXd::Zero(rows, rows);
    product.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
    product.triangularView<Eigen::StrictlyUpper>() = product.transpose();
    int ra = 0;
    for (const CouplingBlock* a : blocks) {
      int rb = 0;
      for (const CouplingBlock* b : blocks) {
        reduced.block(a->row, b->row, a->rows, b->rows) -= product.block(ra, rb, a->rows, b->rows);
        rb += b->rows;
      }
      ra += a->rows;
    }
  }

  const Eigen::VectorXd pose_step = solve_checked(reduced, rhs, "reduced pose system");

  std::vector<Eigen::VectorXd> disp_step(frames);
  for (int f = 0; f < frames; ++f) {
    Eigen::VectorXd r = system.disparity_gradient[f];
    for (const CouplingBlock* a : by_frame[f]) {
      r.noalias() -= a->values.transpose() * pose_step.segment(a->row, a->rows);
    }
    disp_step[f] = c_inv[f].cwiseProduct(r);
  }
  return split_update(system, pose_step, std::move(disp_step));
}

BAUpdate dense_reference_solve(const NormalEquations& system) {
  if (system.total_dim() > kMaxDenseDim) {
    throw Error(ErrorCode::InvalidConfig, "dense reference solve limited to " + std::to_string(kMaxDenseDim) +
                                              " unknowns, got " + std::to_string(system.total_dim()));
  }
  const Eigen::VectorXd x = solve_checked(system.dense_matrix(), system.dense_gradient(), "full normal system");
  std::vector<Eigen::VectorXd> disp_step(system.disparity_diagonal.size());
  for (std::size_t f = 0; f < disp_step.size(); ++f) {
    disp_step[f] = x.segment(system.pose_dim() + static_cast<Eigen::Index>(f) * system.pixels_per_frame,
                             system.pixels_per_frame);
  }
  return split_update(system, x.head(system.pose_dim()), std::move(disp_step));
}

void apply_update(BAProblem& problem, const BAUpdate& update, const std::vector<bool>& fixed_poses) {
  for (std::size_t m = 0; m < problem.size(); ++m) {
    if (m < fixed_poses.size() && fixed_poses[m]) continue;
    problem.poses[m] = retract(problem.poses[m], update.poses[m].vector());
  }
  for (std::size_t f = 0; f < problem.size(); ++f) {
    auto& d = problem.disparities[f];
    for (std::size_t p = 0; p < d.size(); ++p) d[p] = std::max(d[p] + update.disparities[f][p], kMinDisparity);
  }
}

}  // namespace dynba
