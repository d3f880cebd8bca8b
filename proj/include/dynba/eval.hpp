#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dynba/grid.hpp"
#include "dynba/lie.hpp"

namespace dynba {

struct TrajectoryEntry {
  double timestamp = 0.0;
  Pose pose;
};

/// Timestamped poses with strictly increasing timestamps.
struct Trajectory {
  std::vector<TrajectoryEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  /// Appends; throws InvalidConfig when the timestamp does not increase.
  void push_back(double timestamp, const Pose& pose);
  std::vector<Eigen::Vector3d> positions() const;
  void validate() const;
};

inline constexpr double kDefaultAssociationWindow = 0.02;

/// Nearest-timestamp matching within max_dt; unmatched entries are dropped from both sides.
std::pair<Trajectory, Trajectory> associate(const Trajectory& est, const Trajectory& gt,
                                            double max_dt = kDefaultAssociationWindow);

/// Closed-form least-squares similarity mapping est positions onto gt positions.
/// Throws LengthMismatch on unequal sizes and DegenerateGeometry with fewer than three
/// entries or coincident positions.
Sim3Transform umeyama_align(const Trajectory& est, const Trajectory& gt);

Trajectory apply(const Sim3Transform& s, const Trajectory& t);

struct AteReport {
  double rmse = 0.0;
  std::vector<double> errors;
  Sim3Transform alignment;
  /// "sim3", "translation" or "none".
  std::string alignment_mode = "none";
};

/// Translational RMSE of already-aligned, already-matched trajectories.
AteReport ate_rmse(const Trajectory& est_aligned, const Trajectory& gt);

/// Associate, Sim(3)-align and score. Falls back to centroid alignment when the
/// trajectory is too degenerate for a similarity fit (pure rotation, two frames).
AteReport evaluate_ate(const Trajectory& est, const Trajectory& gt, double max_dt = kDefaultAssociationWindow);

struct GeodesicError {
  double trans_norm = 0.0;
  double rot_norm = 0.0;
  /// Mean of the two norms.
  double loss() const { return 0.5 * (trans_norm + rot_norm); }
};

/// Norms of log(gt_rel * pred_rel^-1). Throws NearPiRotation.
GeodesicError pose_geodesic_error(const Pose& gt_rel, const Pose& pred_rel);

/// Mean geodesic loss of the relative poses over the given (i, j) pairs.
double camera_loss(const std::vector<Pose>& gt, const std::vector<Pose>& est,
                   const std::vector<std::pair<int, int>>& pairs);

struct LossWeights {
  double w_cam = 1.0;
  double w_flow = 1.0;
  double w_res = 1.0;
  double w_mask = 1.0;
  double gamma = 0.9;

  void validate() const;
};

inline constexpr int kDefaultUnrollSteps = 15;

/// w_k = gamma^(K - k) for k = 1..K, returned in step order.
std::vector<double> temporal_weights(int steps, double gamma);

struct LossReport {
  std::vector<double> step_weights;
  std::vector<double> per_step_flow;
  std::vector<double> per_step_residual;
  double flow_total = 0.0;
  double residual_total = 0.0;
  /// w_flow * flow_total + w_res * residual_total.
  double total = 0.0;
};

/// Per-step flow loss (mean L2 between ground-truth and induced flow) and residual loss
/// (mean L1 between induced and predicted flow), combined with the temporal weights.
LossReport flow_and_residual_losses(const std::vector<FlowField>& induced, const std::vector<FlowField>& predicted,
                                    const FlowField& gt_flow, const LossWeights& weights);

/// w_cam * cam + w_flow * flow + w_res * res.
double operator_loss(double cam, double flow, double res, const LossWeights& weights);
/// w_cam * cam + w_mask * bce.
double mask_stage_loss(double cam, double bce, const LossWeights& weights);

}  // namespace dynba
