#pragma once

#include <map>
#include <string>
#include <vector>

#include "dynba/ba.hpp"
#include "dynba/eval.hpp"
#include "dynba/graph.hpp"
#include "dynba/masks.hpp"
#include "dynba/synth.hpp"

namespace dynba {

struct PipelineConfig {
  int window_size = 8;
  double keyframe_threshold = kDefaultKeyframeThreshold;
  /// Mean-flow ceiling for connecting a new keyframe to window keyframes.
  double edge_flow_threshold = 12.0;
  SolverConfig solver{.gn_iterations = 4};
  int gba_period = 8;
  int gba_iterations_periodic = 4;
  int gba_iterations_final = 8;
  LoopConfig loop;
  bool loop_closure = true;
  MaskProviderKind mask_provider = MaskProviderKind::Oracle;
  double mask_epsilon = kDefaultOracleEpsilon;
  double residual_sigma = kDefaultResidualSigma;
  bool final_gba_drop_depth = true;

  void validate() const;
};

struct StageCost {
  std::string stage;
  int keyframes = 0;
  int edges = 0;
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  double seconds = 0.0;
};

struct EdgeMaskReport {
  int src = 0;
  int dst = 0;
  int src_frame = 0;
  int dst_frame = 0;
  MaskMetrics metrics;
  /// Fraction of pixels the mask suppresses (value < 0.5).
  double masked_fraction = 0.0;
};

struct RunReport {
  /// Every input frame; non-keyframes interpolated between bracketing keyframes.
  Trajectory trajectory;
  Trajectory keyframe_trajectory;
  Trajectory groundtruth;
  AteReport ate;
  AteReport keyframe_ate;
  std::vector<int> keyframe_frames;
  std::vector<EdgeMaskReport> masks;
  std::map<EdgeKey, MotionMask> mask_grids;
  std::vector<StageCost> stages;
  std::vector<LoopCandidate> loop_edges;
  /// Reprojection-only energy of the final state over every edge.
  double final_reprojection_cost = 0.0;
  double elapsed_seconds = 0.0;
};

/// Online keyframe VO over a synthetic sequence: gating, masked windowed BA with the depth
/// prior, periodic global BA, loop closure and a final global BA.
RunReport run_vo(const SyntheticSequence& sequence, const PipelineConfig& config);

/// Poses for every timestamp, interpolated on se(3) between bracketing keyframes; the last
/// keyframe segment is extrapolated past its end.
Trajectory interpolate_trajectory(const Trajectory& keyframes, const std::vector<double>& timestamps);

}  // namespace dynba
