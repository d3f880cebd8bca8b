#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "dynba/ba.hpp"
#include "dynba/camera.hpp"
#include "dynba/flow.hpp"
#include "dynba/lie.hpp"
#include "dynba/masks.hpp"

namespace dynba {

enum class PatternKind { Linear, PureRotation, TargetLocked };
enum class TargetPath { Lateral, Vertical, Orbital, Spiral };

std::string_view to_string(PatternKind kind);
std::string_view to_string(TargetPath path);
PatternKind parse_pattern_kind(std::string_view name);
TargetPath parse_target_path(std::string_view name);

/// Camera motion family. World y points down so the camera's image axes stay upright
/// for the look-at patterns. Fields unused by a kind are ignored.
struct MotionPattern {
  PatternKind kind = PatternKind::Linear;
  TargetPath path = TargetPath::Orbital;

  // linear: piecewise-linear path through the waypoints with a fixed orientation
  std::vector<Eigen::Vector3d> waypoints;
  /// Axis-angle orientation for linear and pure-rotation patterns.
  Eigen::Vector3d orientation = Eigen::Vector3d::Zero();

  // pure rotation: fixed center, sweep about one world axis
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d axis = Eigen::Vector3d::UnitY();
  double sweep_degrees = 30.0;

  // target locked: optical axis through `target` every frame
  Eigen::Vector3d target = Eigen::Vector3d::Zero();
  /// Orbit radius, or stand-off distance for lateral and vertical paths.
  double radius = 2.0;
  /// Spiral end radius.
  double radius_end = 3.0;
  /// Vertical offset of the path; spiral climbs by `pitch` over the sequence.
  double height = 0.0;
  double pitch = 0.5;
  /// Travel length of lateral and vertical paths.
  double extent = 1.0;
  double start_degrees = 0.0;
  double arc_degrees = 90.0;

  /// Throws InvalidPattern when the parameters of the selected kind are incomplete.
  void validate() const;
};

/// Smooth static depth: mean + amplitude * (average of `components` sinusoids of the
/// world viewing direction), clamped to [1, 10].
struct DepthField {
  double mean = 4.0;
  double amplitude = 1.5;
  double frequency = 3.0;
  int components = 4;
};

inline constexpr double kMinSceneDepth = 1.0;
inline constexpr double kMaxSceneDepth = 10.0;

/// Rigid mover occupying a fixed rectangle of every frame's grid.
struct DynamicObject {
  int x0 = 0;
  int y0 = 0;
  int width = 1;
  int height = 1;
  /// World displacement per frame while active.
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  /// Object surface sits this much closer than the background.
  double depth_offset = 0.5;
  int active_begin = 0;
  int active_end = std::numeric_limits<int>::max();

  /// World displacement accumulated between frames i and j.
  Eigen::Vector3d displacement(int i, int j) const;
};

struct NoiseModel {
  double flow_sigma = 0.25;
  double depth_sigma = 0.05;
  /// Fixed multiplicative depth-prior bias; sampled from [bias_min, bias_max] when unset.
  std::optional<double> depth_scale_bias;
  double bias_min = 0.9;
  double bias_max = 1.1;
};

/// Downsampling from the full-resolution camera to the estimation grid.
inline constexpr int kGridFactor = 8;

struct ScenarioSpec {
  int n_frames = 24;
  double frame_rate = 30.0;
  /// Full-resolution camera; width and height must be multiples of 8.
  Intrinsics camera{200.0, 200.0, 128.0, 96.0, 256, 192};
  MotionPattern pattern;
  DepthField depth_field;
  std::vector<DynamicObject> objects;
  NoiseModel noise;
  std::uint64_t seed = 0;

  void validate() const;
  /// Intrinsics of the 1/8 grid the estimator works on.
  Intrinsics grid_intrinsics() const { return camera.downsampled(kGridFactor); }
};

/// Camera-to-world poses for n_frames evenly spaced along the pattern.
std::vector<Pose> gen_trajectory(const MotionPattern& pattern, int n_frames);

/// Ground-truth state of a generated scenario.
class SceneTruth : public MotionTruth {
 public:
  ScenarioSpec spec;
  Intrinsics intrinsics;
  std::vector<double> timestamps;
  std::vector<Pose> poses;
  std::vector<DisparityMap> disparities;
  /// Object index per grid pixel, -1 for static background.
  Grid<int> labels;

  std::size_t size() const { return poses.size(); }
  std::optional<DisplacementField> displacement(int src_frame, int dst_frame) const override;
  /// Composite flow of camera and object motion from frame i to j.
  FlowField true_flow(int i, int j) const;
  DepthMap depth(int k) const;
};

SceneTruth gen_scene(const ScenarioSpec& spec);

/// Scene plus the simulated frontend: depth priors and on-demand edge observations.
class SyntheticSequence : public MotionTruth {
 public:
  SceneTruth truth;
  std::vector<DepthMap> depth_priors;
  double depth_scale_bias = 1.0;

  std::size_t size() const { return truth.size(); }
  const Intrinsics& intrinsics() const { return truth.intrinsics; }
  std::optional<DisplacementField> displacement(int src_frame, int dst_frame) const override {
    return truth.displacement(src_frame, dst_frame);
  }

  /// Noisy flow, confidence and an all-ones mask for the frame pair; deterministic per pair.
  EdgeObservation observe_edge(int i, int j) const;
};

SyntheticSequence observe(const SceneTruth& truth, const ScenarioSpec& spec);
SyntheticSequence generate(const ScenarioSpec& spec);

inline constexpr double kFlowRangeMin = 8.0;
inline constexpr double kFlowRangeMax = 96.0;

/// True when every neighboring pair's mean valid ground-truth flow, measured in
/// full-resolution pixels, lies in [8, 96].
bool flow_range_check(const SceneTruth& truth);
/// Same test on explicit flows; `pixel_scale` converts their units to full-resolution pixels.
bool flow_range_check(const std::vector<FlowField>& neighbor_flows, double pixel_scale = 1.0);

}  // namespace dynba
