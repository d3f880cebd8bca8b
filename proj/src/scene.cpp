#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dynba/error.hpp"
#include "dynba/rng.hpp"
#include "dynba/synth.hpp"

namespace dynba {

namespace {

enum StreamTag : std::uint64_t {
  kDepthFieldStream = 1,
  kDepthPriorStream = 2,
  kBiasStream = 3,
  kFlowNoiseStream = 4,
};

constexpr double kMinConfidence = 1e-3;

struct Sinusoid {
  Eigen::Vector3d direction;
  double phase;
};

std::vector<Sinusoid> depth_components(const DepthField& field, const CounterRng& rng) {
  const CounterRng s = rng.stream(kDepthFieldStream);
  std::vector<Sinusoid> out;
  for (int m = 0; m < field.components; ++m) {
    const auto base = static_cast<std::uint64_t>(4 * m);
    Eigen::Vector3d a(s.normal(base), s.normal(base + 1), s.normal(base + 2));
    if (a.norm() < 1e-12) a = Eigen::Vector3d::UnitZ();
    out.push_back({a.normalized(), 2.0 * std::numbers::pi * s.uniform(base + 3)});
  }
  return out;
}

DisparityMap render_disparity(const Pose& pose, const Intrinsics& k, const DepthField& field,
                              const std::vector<Sinusoid>& components, const std::vector<DynamicObject>& objects,
                              const Grid<int>& labels) {
  DisparityMap disp(k.width, k.height, 1.0);
  const Eigen::Matrix3d r = pose.rotation_matrix();
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      const Eigen::Vector3d dir = r * Eigen::Vector3d((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0).normalized();
      double wave = 0.0;
      for (const auto& c : components) wave += std::sin(field.frequency * c.direction.dot(dir) + c.phase);
      double z = field.mean + field.amplitude * wave / static_cast<double>(components.size());
      z = std::clamp(z, kMinSceneDepth, kMaxSceneDepth);
      const int label = labels.at(x, y);
      if (label >= 0) z = std::clamp(z - objects[label].depth_offset, kMinSceneDepth, kMaxSceneDepth);
      disp.at(x, y) = 1.0 / z;
    }
  }
  return disp;
}

}  // namespace

Eigen::Vector3d DynamicObject::displacement(int i, int j) const {
  auto steps = [this](int k) { return std::clamp(k, active_begin, std::max(active_begin, active_end)) - active_begin; };
  return velocity * static_cast<double>(steps(j) - steps(i));
}

void ScenarioSpec::validate() const {
  if (n_frames < 2) throw Error(ErrorCode::InvalidConfig, "n_frames must be >= 2");
  if (!(frame_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "frame_rate must be positive");
  camera.validate();
  const Intrinsics grid = grid_intrinsics();
  pattern.validate();
  if (depth_field.components < 1) throw Error(ErrorCode::InvalidConfig, "depth field needs >= 1 component");
  if (!(depth_field.mean > 0.0) || !(depth_field.amplitude >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "depth field mean must be positive and amplitude non-negative");
  }
  if (!(noise.flow_sigma >= 0.0) || !(noise.depth_sigma >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "noise sigmas must be non-negative");
  }
  if (noise.depth_scale_bias && !(*noise.depth_scale_bias > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "depth scale bias must be positive");
  }
  if (!(noise.bias_min > 0.0) || !(noise.bias_max >= noise.bias_min)) {
    throw Error(ErrorCode::InvalidConfig, "depth bias range must be positive and ordered");
  }
  for (const auto& o : objects) {
    if (o.x0 < 0 || o.y0 < 0 || o.width < 1 || o.height < 1 || o.x0 + o.width > grid.width ||
        o.y0 + o.height > grid.height) {
      throw Error(ErrorCode::InvalidConfig, "object footprint outside the grid");
    }
    if (!o.velocity.allFinite() || !std::isfinite(o.depth_offset)) {
      throw Error(ErrorCode::InvalidConfig, "object motion must be finite");
    }
  }
}

SceneTruth gen_scene(const ScenarioSpec& spec) {
  spec.validate();
  SceneTruth t;
  t.spec = spec;
  t.intrinsics = spec.grid_intrinsics();
  t.poses = gen_trajectory(spec.pattern, spec.n_frames);
  for (int k = 0; k < spec.n_frames; ++k) t.timestamps.push_back(k / spec.frame_rate);

  t.labels = Grid<int>(t.intrinsics.width, t.intrinsics.height, -1);
  for (std::size_t o = 0; o < spec.objects.size(); ++o) {
    const auto& obj = spec.objects[o];
    for (int y = obj.y0; y < obj.y0 + obj.height; ++y) {
      for (int x = obj.x0; x < obj.x0 + obj.width; ++x) t.labels.at(x, y) = static_cast<int>(o);
    }
  }

  const std::vector<Sinusoid> components = depth_components(spec.depth_field, CounterRng(spec.seed));
  for (const Pose& pose : t.poses) {
    t.disparities.push_back(render_disparity(pose, t.intrinsics, spec.depth_field, components, spec.objects, t.labels));
  }
  return t;
}

std::optional<DisplacementField> SceneTruth::displacement(int src_frame, int dst_frame) const {
  const int n = static_cast<int>(poses.size());
  if (src_frame < 0 || dst_frame < 0 || src_frame >= n || dst_frame >= n) return std::nullopt;
  DisplacementField x(intrinsics.width, intrinsics.height, Eigen::Vector3d::Zero());
  const Eigen::Matrix3d r_dst_t = poses[dst_frame].rotation_matrix().transpose();
  std::vector<Eigen::Vector3d> per_object;
  for (const auto& obj : spec.objects) per_object.push_back(r_dst_t * obj.displacement(src_frame, dst_frame));
  for (std::size_t p = 0; p < x.size(); ++p) {
    if (labels[p] >= 0) x[p] = per_object[labels[p]];
  }
  return x;
}

FlowField SceneTruth::true_flow(int i, int j) const {
  const auto x = displacement(i, j);
  if (!x) throw Error(ErrorCode::UnknownKeyframe, "frame index out of range");
  return induced_flow_dynamic(poses[i], poses[j], disparities[i], *x, intrinsics);
}

DepthMap SceneTruth::depth(int k) const {
  DepthMap d(intrinsics.width, intrinsics.height);
  for (std::size_t p = 0; p < d.size(); ++p) d[p] = 1.0 / disparities[k][p];
  return d;
}

SyntheticSequence observe(const SceneTruth& truth, const ScenarioSpec& spec) {
  SyntheticSequence seq;
  seq.truth = truth;
  const CounterRng rng(spec.seed);
  seq.depth_scale_bias = spec.noise.depth_scale_bias
                             ? *spec.noise.depth_scale_bias
                             : rng.stream(kBiasStream).uniform(0, spec.noise.bias_min, spec.noise.bias_max);
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const CounterRng s = rng.stream(kDepthPriorStream, k);
    DepthMap d = truth.depth(static_cast<int>(k));
    for (std::size_t p = 0; p < d.size(); ++p) {
      const double n = spec.noise.depth_sigma > 0.0 ? spec.noise.depth_sigma * s.normal(p) : 0.0;
      d[p] = d[p] * std::exp(n) * seq.depth_scale_bias;
    }
    seq.depth_priors.push_back(std::move(d));
  }
  return seq;
}

SyntheticSequence generate(const ScenarioSpec& spec) { return observe(gen_scene(spec), spec); }

EdgeObservation SyntheticSequence::observe_edge(int i, int j) const {
  const double sigma = truth.spec.noise.flow_sigma;
  const CounterRng s = CounterRng(truth.spec.seed).stream(kFlowNoiseStream, static_cast<std::uint64_t>(i),
                                                           static_cast<std::uint64_t>(j));
  EdgeObservation obs;
  obs.src = i;
  obs.dst = j;
  obs.flow_pred = truth.true_flow(i, j);
  const int w = obs.flow_pred.width();
  const int h = obs.flow_pred.height();
  obs.confidence = VectorGrid(w, h, Eigen::Vector2d::Zero());
  obs.mask = ScalarGrid(w, h, 1.0);
  for (std::size_t p = 0; p < obs.flow_pred.vectors.size(); ++p) {
    if (!obs.flow_pred.is_valid(p)) continue;
    double c = 1.0;
    if (sigma > 0.0) {
      const Eigen::Vector2d n(sigma * s.normal(2 * p), sigma * s.normal(2 * p + 1));
      obs.flow_pred.vectors[p] += n;
      c = std::clamp(1.0 / (1.0 + n.squaredNorm() / (sigma * sigma)), kMinConfidence, 1.0);
    }
    obs.confidence[p] = Eigen::Vector2d::Constant(c);
  }
  return obs;
}

bool flow_range_check(const std::vector<FlowField>& neighbor_flows, double pixel_scale) {
  if (neighbor_flows.empty()) return false;
  return std::all_of(neighbor_flows.begin(), neighbor_flows.end(), [pixel_scale](const FlowField& f) {
    const FlowStatistics s = flow_statistics(f);
    const double mean = pixel_scale * s.mean_magnitude;
    return s.valid_count > 0 && mean >= kFlowRangeMin && mean <= kFlowRangeMax;
  });
}

bool flow_range_check(const SceneTruth& truth) {
  if (truth.size() < 2) throw Error(ErrorCode::InvalidConfig, "flow range check needs at least 2 frames");
  std::vector<FlowField> flows;
  for (std::size_t k = 0; k + 1 < truth.size(); ++k) {
    flows.push_back(truth.true_flow(static_cast<int>(k), static_cast<int>(k + 1)));
  }
  return flow_range_check(flows, kGridFactor);
}

}  // namespace dynba
