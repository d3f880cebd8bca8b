#include "dynba/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <iterator>
#include <string>

#include "dynba/error.hpp"

namespace dynba {

void PipelineConfig::validate() const {
  if (window_size < 3) throw Error(ErrorCode::InvalidConfig, "window_size must be at least 3");
  if (!(keyframe_threshold >= 0.0)) throw Error(ErrorCode::InvalidConfig, "keyframe_threshold must be non-negative");
  if (!(edge_flow_threshold > 0.0)) throw Error(ErrorCode::InvalidConfig, "edge_flow_threshold must be positive");
  if (gba_period < 1) throw Error(ErrorCode::InvalidConfig, "gba_period must be at least 1");
  if (gba_iterations_periodic < 0 || gba_iterations_final < 0) {
    throw Error(ErrorCode::InvalidConfig, "global BA iteration counts must be non-negative");
  }
  if (!(mask_epsilon > 0.0)) throw Error(ErrorCode::InvalidConfig, "mask_epsilon must be positive");
  if (!(residual_sigma > 0.0)) throw Error(ErrorCode::NonPositiveSigma, "residual_sigma must be positive");
  solver.validate();
  loop.validate();
}

Trajectory interpolate_trajectory(const Trajectory& keyframes, const std::vector<double>& timestamps) {
  if (keyframes.empty()) throw Error(ErrorCode::EmptyProblem, "no keyframes to interpolate");
  const auto& kf = keyframes.entries;
  Trajectory out;
  for (const double t : timestamps) {
    auto next = std::lower_bound(kf.begin(), kf.end(), t,
                                 [](const TrajectoryEntry& e, double v) { return e.timestamp < v; });
    if (next != kf.end() && (next->timestamp == t || next == kf.begin())) {
      out.push_back(t, next->pose);
      continue;
    }
    if (next == kf.end() && kf.size() == 1) {
      out.push_back(t, kf.back().pose);
      continue;
    }
    // Past the last keyframe the final segment is extrapolated at constant velocity.
    if (next == kf.end()) --next;
    const TrajectoryEntry& a = *std::prev(next);
    const TrajectoryEntry& b = *next;
    const double s = (t - a.timestamp) / (b.timestamp - a.timestamp);
    try {
      const Vector6d xi = se3_log(compose(inverse(a.pose), b.pose)).vector();
      out.push_back(t, compose(a.pose, se3_exp(Twist::from_vector(s * xi))));
    } catch (const Error&) {
      out.push_back(t, s < 0.5 ? a.pose : b.pose);
    }
  }
  return out;
}

namespace {

template <typename F>
auto in_stage(const std::string& stage, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), stage + ": " + e.message());
  }
}

class VoRun {
 public:
  VoRun(const SyntheticSequence& seq, const PipelineConfig& cfg)
      : seq_(seq),
        cfg_(cfg),
        k_(seq.intrinsics()),
        provider_(make_mask_provider(cfg.mask_provider, &seq, cfg.mask_epsilon, cfg.residual_sigma)) {}

  RunReport run();

 private:
  bool is_residual() const { return cfg_.mask_provider == MaskProviderKind::Residual; }

  Keyframe make_keyframe(int frame) const;
  Pose predict_pose(double timestamp) const;
  double gate_flow(int frame) const;
  void observe(FrameGraph& g, const EdgeKey& e) const;
  void remask_from_residuals(FrameGraph& g, const std::vector<int>& ids);
  void optimize(FrameGraph& g, const std::vector<int>& ids, const std::vector<int>& extra_fixed, int iterations,
                bool with_depth, const std::string& stage);
  void insert_keyframe(int frame);
  void close_loops();
  void fill_report(RunReport& report) const;

  std::vector<int> ids_of(const FrameGraph& g) const {
    std::vector<int> ids;
    for (const Keyframe& kf : g.keyframes()) ids.push_back(kf.id);
    return ids;
  }

  const SyntheticSequence& seq_;
  const PipelineConfig& cfg_;
  Intrinsics k_;
  std::unique_ptr<MaskProvider> provider_;
  FrameGraph window_;
  FrameGraph all_;
  int next_id_ = 0;
  int since_gba_ = 0;
  bool slid_ = false;
  std::vector<StageCost> stages_;
  std::vector<LoopCandidate> loops_;
};

Keyframe VoRun::make_keyframe(int frame) const {
  Keyframe kf;
  kf.id = next_id_;
  kf.frame_index = frame;
  kf.timestamp = seq_.truth.timestamps[frame];
  const DepthMap& prior = seq_.depth_priors[frame];
  kf.depth_prior = prior;
  kf.disparity = DisparityMap(prior.width(), prior.height());
  for (std::size_t p = 0; p < prior.size(); ++p) kf.disparity[p] = 1.0 / prior[p];
  kf.pose = all_.empty() ? Pose::identity() : predict_pose(kf.timestamp);
  return kf;
}

// Constant body-frame velocity from the last two keyframes.
Pose VoRun::predict_pose(double timestamp) const {
  const auto& kfs = all_.keyframes();
  const Keyframe& b = kfs.back();
  if (kfs.size() < 2) return b.pose;
  const Keyframe& a = kfs[kfs.size() - 2];
  const double s = (timestamp - b.timestamp) / (b.timestamp - a.timestamp);
  try {
    const Vector6d xi = se3_log(compose(inverse(a.pose), b.pose)).vector();
    return compose(b.pose, se3_exp(Twist::from_vector(s * xi)));
  } catch (const Error&) {
    return b.pose;
  }
}

double VoRun::gate_flow(int frame) const {
  const EdgeObservation obs = seq_.observe_edge(all_.keyframes().back().frame_index, frame);
  return flow_statistics(obs.flow_pred).mean_magnitude;
}

void VoRun::observe(FrameGraph& g, const EdgeKey& e) const {
  const int src_frame = g.keyframe(e.first).frame_index;
  const int dst_frame = g.keyframe(e.second).frame_index;
  EdgeObservation obs = seq_.observe_edge(src_frame, dst_frame);
  obs.mask = provider_->mask({src_frame, dst_frame, &obs, nullptr});
  obs.src = e.first;
  obs.dst = e.second;
  g.edge(e.first, e.second) = std::move(obs);
}

void VoRun::remask_from_residuals(FrameGraph& g, const std::vector<int>& ids) {
  GraphProblem gp = make_problem(g, ids, k_, false);
  // Residuals against the prior's disparity: free per-pixel disparity would absorb object
  // motion along the epipolar direction.
  for (std::size_t n = 0; n < gp.ids.size(); ++n) {
    const Keyframe& kf = g.keyframe(gp.ids[n]);
    if (!kf.depth_prior) continue;
    for (std::size_t p = 0; p < kf.depth_prior->size(); ++p) gp.problem.disparities[n][p] = 1.0 / (*kf.depth_prior)[p];
  }
  for (const EdgeObservation& e : gp.problem.edges) {
    const int src = gp.ids[e.src];
    const int dst = gp.ids[e.dst];
    WeightedResiduals r = weighted_residuals(e, gp.problem, cfg_.solver);
    for (std::size_t p = 0; p < r.residuals.size(); ++p) {
      if (!r.valid[p]) r.residuals[p].setZero();
    }
    EdgeObservation& stored = g.edge(src, dst);
    stored.mask = provider_->mask({g.keyframe(src).frame_index, g.keyframe(dst).frame_index, &stored, &r.residuals});
    for (FrameGraph* other : {&window_, &all_}) {
      if (other != &g && other->has_edge(src, dst)) other->edge(src, dst).mask = stored.mask;
    }
  }
}

void VoRun::optimize(FrameGraph& g, const std::vector<int>& ids, const std::vector<int>& extra_fixed, int iterations,
                     bool with_depth, const std::string& stage) {
  if (iterations <= 0 || ids.size() < 2) return;
  in_stage(stage, [&] {
    GraphProblem gp = make_problem(g, ids, k_, with_depth);
    if (gp.problem.edges.empty()) return 0;
    gp.problem.fixed.assign(gp.ids.size(), false);
    for (const int id : extra_fixed) {
      const auto it = std::find(gp.ids.begin(), gp.ids.end(), id);
      if (it != gp.ids.end()) gp.problem.fixed[static_cast<std::size_t>(it - gp.ids.begin())] = true;
    }
    const auto start = std::chrono::steady_clock::now();
    SolverConfig solver = cfg_.solver;
    solver.gn_iterations = iterations;
    if (!with_depth) solver.depth_weight = 0.0;
    const BAResult result = ba_optimize(gp.problem, solver);
    write_back(window_, gp.ids, result.poses, result.disparities);
    write_back(all_, gp.ids, result.poses, result.disparities);
    stages_.push_back({stage, static_cast<int>(gp.ids.size()), static_cast<int>(gp.problem.edges.size()), iterations,
                       result.initial_cost, result.final_cost,
                       std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
    return 0;
  });
}

void VoRun::insert_keyframe(int frame) {
  Keyframe kf = make_keyframe(frame);
  const int id = kf.id;
  ++next_id_;
  all_.add_keyframe(kf);
  std::vector<EdgeKey> added = add_keyframe_with_edges(window_, kf, cfg_.edge_flow_threshold, k_);
  if (added.empty() && window_.size() > 1) {
    const int prev = window_.keyframes()[window_.size() - 2].id;
    window_.add_edge(prev, id);
    window_.add_edge(id, prev);
    added = {{prev, id}, {id, prev}};
  }
  const std::string tag = "keyframe " + std::to_string(id) + " (frame " + std::to_string(frame) + ")";
  in_stage("masking " + tag, [&] {
    for (const EdgeKey& e : added) {
      observe(window_, e);
      all_.add_edge(e.first, e.second, window_.edge(e.first, e.second));
    }
    return 0;
  });

  const std::size_t before = window_.size();
  slide_window(window_, cfg_.window_size);
  slid_ = slid_ || window_.size() < before;

  const std::vector<int> ids = ids_of(window_);
  std::vector<int> extra;
  if (slid_ && ids.size() > 2) extra.push_back(ids[1]);
  optimize(window_, ids, extra, cfg_.solver.gn_iterations, true, "local BA at " + tag);
  if (is_residual()) {
    in_stage("residual masks at " + tag, [&] {
      remask_from_residuals(window_, ids);
      return 0;
    });
    optimize(window_, ids, extra, cfg_.solver.gn_iterations, true, "masked local BA at " + tag);
  }

  if (++since_gba_ >= cfg_.gba_period) {
    since_gba_ = 0;
    optimize(all_, ids_of(all_), {}, cfg_.gba_iterations_periodic, true, "periodic global BA at " + tag);
  }
}

void VoRun::close_loops() {
  loops_ = in_stage("loop proposal", [&] { return propose_loop_edges(all_, cfg_.loop, k_); });
  if (loops_.empty()) return;
  in_stage("loop masking", [&] {
    for (const LoopCandidate& c : loops_) {
      for (const EdgeKey& e : {EdgeKey{c.i, c.j}, EdgeKey{c.j, c.i}}) {
        if (all_.has_edge(e.first, e.second)) continue;
        all_.add_edge(e.first, e.second);
        observe(all_, e);
      }
    }
    return 0;
  });
  optimize(all_, ids_of(all_), {}, cfg_.gba_iterations_final, true, "loop closure BA");
  if (is_residual()) {
    in_stage("loop residual masks", [&] {
      remask_from_residuals(all_, ids_of(all_));
      return 0;
    });
  }
}

RunReport VoRun::run() {
  const int n = static_cast<int>(seq_.size());
  if (n == 0) throw Error(ErrorCode::EmptyProblem, "sequence has no frames");
  for (int f = 0; f < n; ++f) {
    if (all_.empty()) {
      Keyframe kf = make_keyframe(f);
      ++next_id_;
      window_.add_keyframe(kf);
      all_.add_keyframe(std::move(kf));
      continue;
    }
    // The last frame always joins so the trajectory end is estimated, not extrapolated.
    if (keyframe_gate(gate_flow(f), cfg_.keyframe_threshold) || f == n - 1) insert_keyframe(f);
  }
  if (cfg_.loop_closure) close_loops();
  const bool final_depth = !cfg_.final_gba_drop_depth;
  optimize(all_, ids_of(all_), {}, cfg_.gba_iterations_final, final_depth, "final global BA");

  RunReport report;
  fill_report(report);
  return report;
}

void VoRun::fill_report(RunReport& report) const {
  for (const Keyframe& kf : all_.keyframes()) {
    report.keyframe_trajectory.push_back(kf.timestamp, kf.pose);
    report.keyframe_frames.push_back(kf.frame_index);
  }
  for (std::size_t f = 0; f < seq_.size(); ++f) {
    report.groundtruth.push_back(seq_.truth.timestamps[f], seq_.truth.poses[f]);
  }
  report.trajectory = interpolate_trajectory(report.keyframe_trajectory, seq_.truth.timestamps);
  report.ate = evaluate_ate(report.trajectory, report.groundtruth);
  report.keyframe_ate = evaluate_ate(report.keyframe_trajectory, report.groundtruth);

  for (const auto& [key, edge] : all_.edges()) {
    EdgeMaskReport m;
    m.src = key.first;
    m.dst = key.second;
    m.src_frame = all_.keyframe(key.first).frame_index;
    m.dst_frame = all_.keyframe(key.second).frame_index;
    const MotionMask truth = oracle_mask(m.src_frame, m.dst_frame, &seq_, cfg_.mask_epsilon);
    m.metrics = mask_metrics(edge.mask, truth);
    const auto& v = edge.mask.values();
    m.masked_fraction = v.empty() ? 0.0
                                  : static_cast<double>(std::count_if(v.begin(), v.end(),
                                                                      [](double x) { return x < 0.5; })) /
                                        static_cast<double>(v.size());
    report.masks.push_back(m);
    report.mask_grids.emplace(key, edge.mask);
  }

  if (all_.size() >= 2 && !all_.edges().empty()) {
    const GraphProblem gp = make_problem(all_, ids_of(all_), k_, false);
    if (!gp.problem.edges.empty()) report.final_reprojection_cost = reprojection_cost(gp.problem, cfg_.solver);
  }
  report.stages = stages_;
  report.loop_edges = loops_;
}

}  // namespace

RunReport run_vo(const SyntheticSequence& sequence, const PipelineConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  VoRun vo(sequence, config);
  RunReport report = vo.run();
  report.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace dynba
