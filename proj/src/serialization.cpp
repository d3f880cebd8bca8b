#include "dynba/serialization.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include "dynba/error.hpp"

namespace dynba {

using nlohmann::json;

namespace {

// Reads fields from one JSON object, rejecting keys it was not told about.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where, std::initializer_list<const char*> allowed) : j_(j), where_(where) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, where_ + ": expected an object");
    for (const auto& [key, value] : j.items()) {
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) throw Error(ErrorCode::InvalidConfig, where_ + ": unknown key '" + key + "'");
    }
  }

  template <typename T>
  void get(const char* key, T& out) const {
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, where_ + "." + key + ": " + e.what());
    }
  }

  void get(const char* key, Eigen::Vector3d& out) const {
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    out = vector3(*it, where_ + "." + key);
  }

  const json* find(const char* key) const {
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const std::string& where() const { return where_; }

  static Eigen::Vector3d vector3(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::InvalidConfig, where + ": expected [x, y, z]");
    Eigen::Vector3d v;
    for (int i = 0; i < 3; ++i) {
      if (!j[i].is_number()) throw Error(ErrorCode::InvalidConfig, where + ": expected numbers");
      v[i] = j[i].get<double>();
    }
    return v;
  }

 private:
  const json& j_;
  std::string where_;
};

json vec(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

void check_schema(const ObjectReader& r, const char* expected) {
  const json* s = r.find("schema");
  if (s == nullptr) return;
  if (!s->is_string() || s->get<std::string>() != expected) {
    throw Error(ErrorCode::InvalidConfig, r.where() + ": schema must be \"" + std::string(expected) + "\"");
  }
}

Intrinsics intrinsics_from_json(const json& j) {
  ObjectReader r(j, "camera", {"fx", "fy", "cx", "cy", "width", "height"});
  Intrinsics k;
  r.get("fx", k.fx);
  r.get("fy", k.fy);
  r.get("cx", k.cx);
  r.get("cy", k.cy);
  r.get("width", k.width);
  r.get("height", k.height);
  return k;
}

MotionPattern pattern_from_json(const json& j) {
  ObjectReader r(j, "pattern",
                 {"kind", "path", "waypoints", "orientation", "position", "axis", "sweep_degrees", "target", "radius",
                  "radius_end", "height", "pitch", "extent", "start_degrees", "arc_degrees"});
  MotionPattern p;
  std::string name;
  r.get("kind", name);
  if (!name.empty()) p.kind = parse_pattern_kind(name);
  name.clear();
  r.get("path", name);
  if (!name.empty()) p.path = parse_target_path(name);
  if (const json* w = r.find("waypoints")) {
    if (!w->is_array()) throw Error(ErrorCode::InvalidConfig, "pattern.waypoints: expected an array");
    for (const json& v : *w) p.waypoints.push_back(ObjectReader::vector3(v, "pattern.waypoints"));
  }
  r.get("orientation", p.orientation);
  r.get("position", p.position);
  r.get("axis", p.axis);
  r.get("sweep_degrees", p.sweep_degrees);
  r.get("target", p.target);
  r.get("radius", p.radius);
  r.get("radius_end", p.radius_end);
  r.get("height", p.height);
  r.get("pitch", p.pitch);
  r.get("extent", p.extent);
  r.get("start_degrees", p.start_degrees);
  r.get("arc_degrees", p.arc_degrees);
  return p;
}

DynamicObject object_from_json(const json& j) {
  ObjectReader r(j, "objects[]",
                 {"x0", "y0", "width", "height", "velocity", "depth_offset", "active_begin", "active_end"});
  DynamicObject o;
  r.get("x0", o.x0);
  r.get("y0", o.y0);
  r.get("width", o.width);
  r.get("height", o.height);
  r.get("velocity", o.velocity);
  r.get("depth_offset", o.depth_offset);
  r.get("active_begin", o.active_begin);
  r.get("active_end", o.active_end);
  return o;
}

}  // namespace

ScenarioSpec scenario_from_json(const json& j) {
  ObjectReader r(j, "scenario",
                 {"schema", "n_frames", "frame_rate", "camera", "pattern", "depth_field", "objects", "noise", "seed"});
  check_schema(r, kScenarioSchema);
  ScenarioSpec spec;
  r.get("n_frames", spec.n_frames);
  r.get("frame_rate", spec.frame_rate);
  r.get("seed", spec.seed);
  if (const json* c = r.find("camera")) spec.camera = intrinsics_from_json(*c);
  if (const json* p = r.find("pattern")) spec.pattern = pattern_from_json(*p);
  if (const json* d = r.find("depth_field")) {
    ObjectReader dr(*d, "depth_field", {"mean", "amplitude", "frequency", "components"});
    dr.get("mean", spec.depth_field.mean);
    dr.get("amplitude", spec.depth_field.amplitude);
    dr.get("frequency", spec.depth_field.frequency);
    dr.get("components", spec.depth_field.components);
  }
  if (const json* o = r.find("objects")) {
    if (!o->is_array()) throw Error(ErrorCode::InvalidConfig, "objects: expected an array");
    for (const json& e : *o) spec.objects.push_back(object_from_json(e));
  }
  if (const json* n = r.find("noise")) {
    ObjectReader nr(*n, "noise", {"flow_sigma", "depth_sigma", "depth_scale_bias", "bias_min", "bias_max"});
    nr.get("flow_sigma", spec.noise.flow_sigma);
    nr.get("depth_sigma", spec.noise.depth_sigma);
    nr.get("bias_min", spec.noise.bias_min);
    nr.get("bias_max", spec.noise.bias_max);
    if (const json* b = nr.find("depth_scale_bias"); b != nullptr && !b->is_null()) {
      double v = 1.0;
      nr.get("depth_scale_bias", v);
      spec.noise.depth_scale_bias = v;
    }
  }
  spec.validate();
  return spec;
}

json scenario_to_json(const ScenarioSpec& spec) {
  const MotionPattern& p = spec.pattern;
  json waypoints = json::array();
  for (const auto& w : p.waypoints) waypoints.push_back(vec(w));
  json objects = json::array();
  for (const DynamicObject& o : spec.objects) {
    objects.push_back({{"x0", o.x0},
                       {"y0", o.y0},
                       {"width", o.width},
                       {"height", o.height},
                       {"velocity", vec(o.velocity)},
                       {"depth_offset", o.depth_offset},
                       {"active_begin", o.active_begin},
                       {"active_end", o.active_end}});
  }
  return {
      {"schema", kScenarioSchema},
      {"n_frames", spec.n_frames},
      {"frame_rate", spec.frame_rate},
      {"seed", spec.seed},
      {"camera",
       {{"fx", spec.camera.fx},
        {"fy", spec.camera.fy},
        {"cx", spec.camera.cx},
        {"cy", spec.camera.cy},
        {"width", spec.camera.width},
        {"height", spec.camera.height}}},
      {"pattern",
       {{"kind", to_string(p.kind)},
        {"path", to_string(p.path)},
        {"waypoints", waypoints},
        {"orientation", vec(p.orientation)},
        {"position", vec(p.position)},
        {"axis", vec(p.axis)},
        {"sweep_degrees", p.sweep_degrees},
        {"target", vec(p.target)},
        {"radius", p.radius},
        {"radius_end", p.radius_end},
        {"height", p.height},
        {"pitch", p.pitch},
        {"extent", p.extent},
        {"start_degrees", p.start_degrees},
        {"arc_degrees", p.arc_degrees}}},
      {"depth_field",
       {{"mean", spec.depth_field.mean},
        {"amplitude", spec.depth_field.amplitude},
        {"frequency", spec.depth_field.frequency},
        {"components", spec.depth_field.components}}},
      {"objects", objects},
      {"noise",
       {{"flow_sigma", spec.noise.flow_sigma},
        {"depth_sigma", spec.noise.depth_sigma},
        {"depth_scale_bias",
         spec.noise.depth_scale_bias ? json(*spec.noise.depth_scale_bias) : json(nullptr)},
        {"bias_min", spec.noise.bias_min},
        {"bias_max", spec.noise.bias_max}}},
  };
}

PipelineConfig pipeline_config_from_json(const json& j) {
  ObjectReader r(j, "pipeline",
                 {"schema", "window_size", "keyframe_threshold", "edge_flow_threshold", "solver", "gba_period",
                  "gba_iterations_periodic", "gba_iterations_final", "loop", "loop_closure", "mask_provider",
                  "mask_epsilon", "residual_sigma", "final_gba_drop_depth"});
  check_schema(r, kPipelineSchema);
  PipelineConfig c;
  r.get("window_size", c.window_size);
  r.get("keyframe_threshold", c.keyframe_threshold);
  r.get("edge_flow_threshold", c.edge_flow_threshold);
  r.get("gba_period", c.gba_period);
  r.get("gba_iterations_periodic", c.gba_iterations_periodic);
  r.get("gba_iterations_final", c.gba_iterations_final);
  r.get("loop_closure", c.loop_closure);
  r.get("mask_epsilon", c.mask_epsilon);
  r.get("residual_sigma", c.residual_sigma);
  r.get("final_gba_drop_depth", c.final_gba_drop_depth);
  std::string provider;
  r.get("mask_provider", provider);
  if (!provider.empty()) c.mask_provider = parse_mask_provider(provider);
  if (const json* s = r.find("solver")) {
    ObjectReader sr(*s, "solver",
                    {"gn_iterations", "damping", "depth_weight", "huber_off", "huber_delta", "fix_first_pose",
                     "adaptive_damping"});
    sr.get("gn_iterations", c.solver.gn_iterations);
    sr.get("damping", c.solver.damping);
    sr.get("depth_weight", c.solver.depth_weight);
    sr.get("huber_off", c.solver.huber_off);
    sr.get("huber_delta", c.solver.huber_delta);
    sr.get("fix_first_pose", c.solver.fix_first_pose);
    sr.get("adaptive_damping", c.solver.adaptive_damping);
  }
  if (const json* l = r.find("loop")) {
    ObjectReader lr(*l, "loop", {"temporal_gap", "max_flow"});
    lr.get("temporal_gap", c.loop.temporal_gap);
    lr.get("max_flow", c.loop.max_flow);
  }
  c.validate();
  return c;
}

json pipeline_config_to_json(const PipelineConfig& c) {
  return {
      {"schema", kPipelineSchema},
      {"window_size", c.window_size},
      {"keyframe_threshold", c.keyframe_threshold},
      {"edge_flow_threshold", c.edge_flow_threshold},
      {"solver",
       {{"gn_iterations", c.solver.gn_iterations},
        {"damping", c.solver.damping},
        {"depth_weight", c.solver.depth_weight},
        {"huber_off", c.solver.huber_off},
        {"huber_delta", c.solver.huber_delta},
        {"fix_first_pose", c.solver.fix_first_pose},
        {"adaptive_damping", c.solver.adaptive_damping}}},
      {"gba_period", c.gba_period},
      {"gba_iterations_periodic", c.gba_iterations_periodic},
      {"gba_iterations_final", c.gba_iterations_final},
      {"loop", {{"temporal_gap", c.loop.temporal_gap}, {"max_flow", c.loop.max_flow}}},
      {"loop_closure", c.loop_closure},
      {"mask_provider", to_string(c.mask_provider)},
      {"mask_epsilon", c.mask_epsilon},
      {"residual_sigma", c.residual_sigma},
      {"final_gba_drop_depth", c.final_gba_drop_depth},
  };
}

json ate_to_json(const AteReport& r) {
  const Sim3Transform& s = r.alignment;
  const Eigen::Quaterniond& q = s.rotation();
  return {{"rmse", r.rmse},
          {"errors", r.errors},
          {"alignment_mode", r.alignment_mode},
          {"alignment",
           {{"scale", s.scale()},
            {"rotation_xyzw", json::array({q.x(), q.y(), q.z(), q.w()})},
            {"translation", vec(s.translation())}}}};
}

json report_to_json(const RunReport& r) {
  json trajectory = json::array();
  for (std::size_t n = 0; n < r.keyframe_trajectory.size(); ++n) {
    const TrajectoryEntry& e = r.keyframe_trajectory.entries[n];
    const Eigen::Quaterniond& q = e.pose.rotation();
    trajectory.push_back({{"timestamp", e.timestamp},
                          {"frame", r.keyframe_frames.at(n)},
                          {"translation", vec(e.pose.translation())},
                          {"rotation_xyzw", json::array({q.x(), q.y(), q.z(), q.w()})}});
  }
  json groundtruth = json::array();
  for (const TrajectoryEntry& e : r.groundtruth.entries) {
    groundtruth.push_back({{"timestamp", e.timestamp}, {"translation", vec(e.pose.translation())}});
  }
  json full = json::array();
  for (const TrajectoryEntry& e : r.trajectory.entries) {
    full.push_back({{"timestamp", e.timestamp}, {"translation", vec(e.pose.translation())}});
  }
  json masks = json::array();
  for (const EdgeMaskReport& m : r.masks) {
    masks.push_back({{"src", m.src},
                     {"dst", m.dst},
                     {"src_frame", m.src_frame},
                     {"dst_frame", m.dst_frame},
                     {"bce", m.metrics.bce},
                     {"iou", m.metrics.iou},
                     {"masked_fraction", m.masked_fraction}});
  }
  json stages = json::array();
  for (const StageCost& s : r.stages) {
    stages.push_back({{"stage", s.stage},
                      {"keyframes", s.keyframes},
                      {"edges", s.edges},
                      {"iterations", s.iterations},
                      {"initial_cost", s.initial_cost},
                      {"final_cost", s.final_cost},
                      {"seconds", s.seconds}});
  }
  json loops = json::array();
  for (const LoopCandidate& c : r.loop_edges) loops.push_back({{"i", c.i}, {"j", c.j}, {"flow_distance", c.flow_distance}});
  return {{"schema", kReportSchema},
          {"keyframes", trajectory},
          {"trajectory", full},
          {"groundtruth", groundtruth},
          {"ate", ate_to_json(r.ate)},
          {"keyframe_ate", ate_to_json(r.keyframe_ate)},
          {"masks", masks},
          {"stages", stages},
          {"loop_edges", loops},
          {"final_reprojection_cost", r.final_reprojection_cost},
          {"elapsed_seconds", r.elapsed_seconds}};
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

std::optional<std::uint64_t> seed_override() {
  const char* env = std::getenv("DYNBA_SEED");
  if (env == nullptr || *env == '\0') return std::nullopt;
  const std::string text(env);
  if (text.find_first_not_of("0123456789") != std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, "DYNBA_SEED must be an unsigned integer, got '" + text + "'");
  }
  errno = 0;
  const unsigned long long v = std::strtoull(text.c_str(), nullptr, 10);
  if (errno == ERANGE) throw Error(ErrorCode::InvalidConfig, "DYNBA_SEED out of range");
  return static_cast<std::uint64_t>(v);
}

void apply_seed_override(ScenarioSpec& spec) {
  if (const auto seed = seed_override()) spec.seed = *seed;
}

void write_pgm(std::ostream& out, const ScalarGrid& grid) {
  out << "P5\n" << grid.width() << ' ' << grid.height() << "\n255\n";
  for (const double v : grid.values()) {
    const double c = std::clamp(v, 0.0, 1.0);
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
  }
}

void write_pgm(const std::filesystem::path& path, const ScalarGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  write_pgm(out, grid);
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

}  // namespace dynba
