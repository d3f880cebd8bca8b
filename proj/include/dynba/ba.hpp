#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "dynba/camera.hpp"
#include "dynba/grid.hpp"
#include "dynba/lie.hpp"

namespace dynba {

/// Smallest disparity kept after a Gauss-Newton update.
inline constexpr double kMinDisparity = 1e-4;

/// Flow measurement on one directed edge src -> dst: predicted flow, two-channel
/// confidence and the motion mask (1 = static, 0 = suppressed).
struct EdgeObservation {
  int src = 0;
  int dst = 0;
  FlowField flow_pred;
  VectorGrid confidence;
  ScalarGrid mask;

  bool filled() const { return !flow_pred.vectors.empty(); }
  /// Throws ShapeMismatch on inconsistent grids, InvalidConfig on out-of-range weights.
  void validate(int width, int height) const;
};

struct SolverConfig {
  int gn_iterations = 15;
  double damping = 1e-4;
  double depth_weight = 0.05;
  bool huber_off = true;
  /// Only used when huber_off is false.
  double huber_delta = 1.0;
  bool fix_first_pose = true;
  /// Halve cost-increasing steps up to four times, then reject them and retry with tenfold
  /// damping; plain Gauss-Newton when false.
  bool adaptive_damping = true;

  void validate() const;
};

/// Poses are indexed by position; edge src/dst refer to those indices.
struct BAProblem {
  Intrinsics intrinsics;
  std::vector<Pose> poses;
  std::vector<DisparityMap> disparities;
  std::vector<EdgeObservation> edges;
  /// Empty, or one optional metric depth map per pose.
  std::vector<std::optional<DepthMap>> depth_priors;
  /// Empty, or one flag per pose; extra gauge anchors beyond fix_first_pose.
  std::vector<bool> fixed;

  std::size_t size() const { return poses.size(); }
  bool has_depth_priors() const;
  void validate() const;
};

struct WeightedResiduals {
  VectorGrid residuals;
  VectorGrid weights;
  /// Reprojection validity of the current estimate.
  Grid<unsigned char> valid;
};

/// r = f_pred - f_induced and channel-wise weight w * M (zero where the reprojection is invalid).
WeightedResiduals weighted_residuals(const EdgeObservation& edge, const BAProblem& problem,
                                     const SolverConfig& config = {});

/// Rows `row .. row+rows` of the pose-disparity coupling for one keyframe's disparity grid.
struct CouplingBlock {
  int row = 0;
  int rows = 6;
  int frame = 0;
  Eigen::MatrixXd values;
};

/// Block form of the damped Gauss-Newton system
///   [B  E] [dx]   [g_pose]
///   [E' C] [dd] = [g_disp]
/// with C diagonal. When the scale constraint is active the pose block carries one extra
/// Lagrange-multiplier row that holds the mean log-disparity of the first keyframe fixed.
struct NormalEquations {
  int num_poses = 0;
  int pixels_per_frame = 0;
  Eigen::MatrixXd pose_block;
  std::vector<CouplingBlock> coupling;
  std::vector<Eigen::VectorXd> disparity_diagonal;
  Eigen::VectorXd pose_gradient;
  std::vector<Eigen::VectorXd> disparity_gradient;
  std::vector<bool> fixed_poses;
  bool scale_constraint = false;

  int pose_dim() const { return static_cast<int>(pose_block.rows()); }
  int total_dim() const;

  Eigen::MatrixXd dense_matrix() const;
  Eigen::VectorXd dense_gradient() const;
};

NormalEquations assemble_normal_equations(const BAProblem& problem, const SolverConfig& config);

struct BAUpdate {
  std::vector<Twist> poses;
  std::vector<Eigen::VectorXd> disparities;
  /// Stacked (poses, disparities) form, useful for comparisons.
  Eigen::VectorXd stacked() const;
};

/// Eliminates the diagonal disparity block, solves the reduced pose system and back-substitutes.
BAUpdate schur_solve(const NormalEquations& system);

/// Direct factorization of the full stacked system; intended for systems up to 2000 unknowns.
BAUpdate dense_reference_solve(const NormalEquations& system);

/// Applies a solved update in place: left retraction for free poses, clamped additive disparity step.
void apply_update(BAProblem& problem, const BAUpdate& update, const std::vector<bool>& fixed_poses);

/// Weighted reprojection energy plus the depth-prior term scaled by config.depth_weight.
double ba_cost(const BAProblem& problem, const SolverConfig& config);
/// Weighted reprojection energy only.
double reprojection_cost(const BAProblem& problem, const SolverConfig& config = {});

struct BAResult {
  std::vector<Pose> poses;
  std::vector<DisparityMap> disparities;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::vector<double> per_iteration_costs;
  int rejected_steps = 0;
};

/// Runs config.gn_iterations linearize-solve-retract steps. With adaptive damping a step that
/// raises the cost is discarded (the iteration still counts) and the damping grows tenfold;
/// accepted steps shrink it back toward config.damping.
BAResult ba_optimize(const BAProblem& problem, const SolverConfig& config);

}  // namespace dynba
