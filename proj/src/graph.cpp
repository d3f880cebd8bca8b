#include "dynba/graph.hpp"

#include <algorithm>
#include <string>
#include <tuple>

#include "dynba/error.hpp"
#include "dynba/flow.hpp"

namespace dynba {

void LoopConfig::validate() const {
  if (temporal_gap < 1) throw Error(ErrorCode::InvalidConfig, "loop temporal_gap must be >= 1");
  if (!(max_flow > 0.0)) throw Error(ErrorCode::InvalidConfig, "loop max_flow must be > 0");
}

std::size_t FrameGraph::position(int id) const {
  const auto it = std::lower_bound(keyframes_.begin(), keyframes_.end(), id,
                                   [](const Keyframe& kf, int v) { return kf.id < v; });
  if (it == keyframes_.end() || it->id != id) {
    throw Error(ErrorCode::UnknownKeyframe, "keyframe " + std::to_string(id) + " is not in the graph");
  }
  return static_cast<std::size_t>(it - keyframes_.begin());
}

void FrameGraph::add_keyframe(Keyframe kf) {
  if (!keyframes_.empty() && kf.id <= keyframes_.back().id) {
    throw Error(ErrorCode::DuplicateId, "keyframe id " + std::to_string(kf.id) + " is not newer than " +
                                            std::to_string(keyframes_.back().id));
  }
  if (!keyframes_.empty() && !(kf.timestamp > keyframes_.back().timestamp)) {
    throw Error(ErrorCode::DuplicateId, "keyframe timestamps must increase with id");
  }
  keyframes_.push_back(std::move(kf));
}

void FrameGraph::remove_keyframe(int id) {
  keyframes_.erase(keyframes_.begin() + static_cast<std::ptrdiff_t>(position(id)));
  std::erase_if(edges_, [id](const auto& e) { return e.first.first == id || e.first.second == id; });
}

bool FrameGraph::contains(int id) const {
  const auto it = std::lower_bound(keyframes_.begin(), keyframes_.end(), id,
                                   [](const Keyframe& kf, int v) { return kf.id < v; });
  return it != keyframes_.end() && it->id == id;
}

const Keyframe& FrameGraph::keyframe(int id) const { return keyframes_[position(id)]; }
Keyframe& FrameGraph::keyframe(int id) { return keyframes_[position(id)]; }

void FrameGraph::add_edge(int src, int dst, EdgeObservation observation) {
  if (!contains(src) || !contains(dst)) {
    throw Error(ErrorCode::UnknownKeyframe, "edge " + std::to_string(src) + "->" + std::to_string(dst) +
                                                " references a missing keyframe");
  }
  if (src == dst) throw Error(ErrorCode::DuplicateId, "self edge on keyframe " + std::to_string(src));
  if (has_edge(src, dst)) {
    throw Error(ErrorCode::DuplicateId, "edge " + std::to_string(src) + "->" + std::to_string(dst) + " exists");
  }
  observation.src = src;
  observation.dst = dst;
  edges_.emplace(EdgeKey{src, dst}, std::move(observation));
}

void FrameGraph::remove_edge(int src, int dst) { edges_.erase({src, dst}); }

EdgeObservation& FrameGraph::edge(int src, int dst) {
  const auto it = edges_.find({src, dst});
  if (it == edges_.end()) throw Error(ErrorCode::UnknownKeyframe, "no edge " + std::to_string(src) + "->" + std::to_string(dst));
  return it->second;
}

const EdgeObservation& FrameGraph::edge(int src, int dst) const {
  return const_cast<FrameGraph*>(this)->edge(src, dst);
}

void FrameGraph::check_consistency() const {
  for (const auto& [key, obs] : edges_) {
    if (!contains(key.first) || !contains(key.second) || key.first == key.second) {
      throw Error(ErrorCode::UnknownKeyframe, "dangling edge " + std::to_string(key.first) + "->" +
                                                  std::to_string(key.second));
    }
  }
}

bool keyframe_gate(double mean_flow, double threshold) { return mean_flow >= threshold; }

double mean_flow_distance(int i, int j, const FrameGraph& graph, const Intrinsics& k) {
  const Keyframe& a = graph.keyframe(i);
  const Keyframe& b = graph.keyframe(j);
  const FlowStatistics stats = flow_statistics(induced_flow(a.pose, b.pose, a.disparity, k));
  if (stats.valid_count == 0 || stats.valid_fraction < kMinCovisibleOverlap) return kNotCovisible;
  return stats.mean_magnitude;
}

std::vector<EdgeKey> add_keyframe_with_edges(FrameGraph& graph, Keyframe kf, double flow_threshold,
                                             const Intrinsics& k) {
  const int id = kf.id;
  graph.add_keyframe(std::move(kf));
  std::vector<EdgeKey> added;
  for (const Keyframe& other : graph.keyframes()) {
    if (other.id == id) continue;
    if (mean_flow_distance(id, other.id, graph, k) > flow_threshold) continue;
    graph.add_edge(id, other.id);
    graph.add_edge(other.id, id);
    added.emplace_back(id, other.id);
    added.emplace_back(other.id, id);
  }
  return added;
}

std::vector<int> slide_window(FrameGraph& graph, int max_keyframes) {
  if (max_keyframes < 2) throw Error(ErrorCode::InvalidConfig, "window must hold at least 2 keyframes");
  std::vector<int> removed;
  while (static_cast<int>(graph.size()) > max_keyframes) {
    const int id = graph.keyframes()[1].id;
    graph.remove_keyframe(id);
    removed.push_back(id);
  }
  return removed;
}

std::vector<LoopCandidate> propose_loop_edges(const FrameGraph& graph, const LoopConfig& cfg, const Intrinsics& k) {
  cfg.validate();
  std::vector<LoopCandidate> out;
  const auto& kfs = graph.keyframes();
  for (std::size_t a = 0; a < kfs.size(); ++a) {
    for (std::size_t b = a + 1; b < kfs.size(); ++b) {
      if (kfs[b].id - kfs[a].id <= cfg.temporal_gap) continue;
      const double d = mean_flow_distance(kfs[a].id, kfs[b].id, graph, k);
      if (d <= cfg.max_flow) out.push_back({kfs[a].id, kfs[b].id, d});
    }
  }
  std::sort(out.begin(), out.end(), [](const LoopCandidate& x, const LoopCandidate& y) {
    return std::tie(x.flow_distance, x.i, x.j) < std::tie(y.flow_distance, y.i, y.j);
  });
  return out;
}

GraphProblem make_problem(const FrameGraph& graph, const std::vector<int>& ids, const Intrinsics& k,
                          bool with_depth_priors) {
  GraphProblem gp;
  gp.ids = ids;
  gp.problem.intrinsics = k;
  std::map<int, int> index;
  for (int id : ids) {
    const Keyframe& kf = graph.keyframe(id);
    index[id] = static_cast<int>(gp.problem.poses.size());
    gp.problem.poses.push_back(kf.pose);
    gp.problem.disparities.push_back(kf.disparity);
    if (with_depth_priors) gp.problem.depth_priors.push_back(kf.depth_prior);
  }
  for (const auto& [key, obs] : graph.edges()) {
    const auto src = index.find(key.first);
    const auto dst = index.find(key.second);
    if (src == index.end() || dst == index.end() || !obs.filled()) continue;
    EdgeObservation e = obs;
    e.src = src->second;
    e.dst = dst->second;
    gp.problem.edges.push_back(std::move(e));
  }
  return gp;
}

void write_back(FrameGraph& graph, const std::vector<int>& ids, const std::vector<Pose>& poses,
                const std::vector<DisparityMap>& disparities) {
  for (std::size_t n = 0; n < ids.size(); ++n) {
    if (!graph.contains(ids[n])) continue;
    Keyframe& kf = graph.keyframe(ids[n]);
    kf.pose = poses[n];
    kf.disparity = disparities[n];
  }
}

}  // namespace dynba
