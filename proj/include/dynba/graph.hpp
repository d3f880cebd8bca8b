#pragma once

#include <limits>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "dynba/ba.hpp"
#include "dynba/camera.hpp"
#include "dynba/lie.hpp"

namespace dynba {

struct Keyframe {
  int id = 0;
  double timestamp = 0.0;
  Pose pose;
  DisparityMap disparity;
  std::optional<DepthMap> depth_prior;
  /// Index of the source frame in the input sequence.
  int frame_index = -1;
};

struct LoopConfig {
  int temporal_gap = 25;
  double max_flow = 32.0;

  void validate() const;
};

/// Directed edge (src id, dst id).
using EdgeKey = std::pair<int, int>;

inline constexpr double kNotCovisible = std::numeric_limits<double>::infinity();
/// Pairs whose valid reprojected overlap is below this fraction are never covisible.
inline constexpr double kMinCovisibleOverlap = 0.25;
inline constexpr double kDefaultKeyframeThreshold = 2.5;

/// Keyframes ordered by id plus directed edges between live keyframes.
class FrameGraph {
 public:
  /// Throws DuplicateId unless kf.id exceeds every existing id.
  void add_keyframe(Keyframe kf);
  /// Removes the keyframe and every incident edge. Throws UnknownKeyframe.
  void remove_keyframe(int id);

  bool contains(int id) const;
  const Keyframe& keyframe(int id) const;
  Keyframe& keyframe(int id);
  const std::vector<Keyframe>& keyframes() const { return keyframes_; }
  std::size_t size() const { return keyframes_.size(); }
  bool empty() const { return keyframes_.empty(); }

  /// Throws UnknownKeyframe for dead endpoints, DuplicateId for an existing edge or a self loop.
  void add_edge(int src, int dst, EdgeObservation observation = {});
  void remove_edge(int src, int dst);
  bool has_edge(int src, int dst) const { return edges_.contains({src, dst}); }
  const std::map<EdgeKey, EdgeObservation>& edges() const { return edges_; }
  EdgeObservation& edge(int src, int dst);
  const EdgeObservation& edge(int src, int dst) const;

  /// Throws UnknownKeyframe if any edge references a removed keyframe.
  void check_consistency() const;

 private:
  std::size_t position(int id) const;

  std::vector<Keyframe> keyframes_;
  std::map<EdgeKey, EdgeObservation> edges_;
};

/// Accepts a frame as keyframe when its mean flow reaches the threshold (equality accepted).
bool keyframe_gate(double mean_flow, double threshold = kDefaultKeyframeThreshold);

/// Mean induced-flow magnitude from keyframe i into keyframe j under the current estimates;
/// kNotCovisible when fewer than a quarter of the pixels reproject validly.
double mean_flow_distance(int i, int j, const FrameGraph& graph, const Intrinsics& k);

/// Inserts kf and bidirectional edges to every existing keyframe within flow_threshold.
/// The new edges carry empty observations until a provider fills them.
std::vector<EdgeKey> add_keyframe_with_edges(FrameGraph& graph, Keyframe kf, double flow_threshold,
                                             const Intrinsics& k);

/// Drops the oldest keyframes after the first until at most max_keyframes remain.
std::vector<int> slide_window(FrameGraph& graph, int max_keyframes);

struct LoopCandidate {
  int i = 0;
  int j = 0;
  double flow_distance = 0.0;
};

/// Pairs i < j with id gap above the temporal threshold and mean flow within max_flow,
/// sorted by flow distance then by (i, j).
std::vector<LoopCandidate> propose_loop_edges(const FrameGraph& graph, const LoopConfig& cfg, const Intrinsics& k);

/// BA view over a set of keyframes; `ids[n]` is the keyframe behind pose n.
struct GraphProblem {
  BAProblem problem;
  std::vector<int> ids;
};

/// Builds a BA problem from the given keyframes and every filled edge between them.
GraphProblem make_problem(const FrameGraph& graph, const std::vector<int>& ids, const Intrinsics& k,
                          bool with_depth_priors);

/// Copies optimized poses and disparities back into the graph for keyframes it still holds.
void write_back(FrameGraph& graph, const std::vector<int>& ids, const std::vector<Pose>& poses,
                const std::vector<DisparityMap>& disparities);

}  // namespace dynba
