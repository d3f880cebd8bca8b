// dynba: generate synthetic sequences, run the VO backend, score and plot trajectories.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dynba/error.hpp"
#include "dynba/eval.hpp"
#include "dynba/pipeline.hpp"
#include "dynba/plot.hpp"
#include "dynba/serialization.hpp"
#include "dynba/synth.hpp"
#include "dynba/tum.hpp"

namespace fs = std::filesystem;
using namespace dynba;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

ScenarioSpec load_scenario(const fs::path& path) {
  ScenarioSpec spec = scenario_from_json(read_json(path));
  apply_seed_override(spec);
  spec.validate();
  return spec;
}

void cmd_gen(const fs::path& spec_path, const fs::path& out) {
  const ScenarioSpec spec = load_scenario(spec_path);
  const SyntheticSequence seq = generate(spec);
  if (!flow_range_check(seq.truth)) {
    std::cerr << "warning: consecutive-frame flow outside [" << kFlowRangeMin << ", " << kFlowRangeMax << "] px\n";
  }
  ensure_dir(out);
  write_json(out / "scenario.json", scenario_to_json(spec));
  Trajectory gt;
  for (std::size_t f = 0; f < seq.size(); ++f) gt.push_back(seq.truth.timestamps[f], seq.truth.poses[f]);
  write_tum(out / "groundtruth.tum", gt);
  std::cout << "wrote " << gt.size() << " frames to " << out.string() << '\n';
}

void cmd_run(const fs::path& seq_dir, const std::string& config_path, const fs::path& out) {
  const ScenarioSpec spec = load_scenario(seq_dir / "scenario.json");
  const PipelineConfig config = config_path.empty() ? PipelineConfig{} : pipeline_config_from_json(read_json(config_path));
  const SyntheticSequence seq = generate(spec);
  const RunReport report = run_vo(seq, config);

  ensure_dir(out / "masks");
  write_tum(out / "trajectory.tum", report.trajectory);
  write_tum(out / "keyframes.tum", report.keyframe_trajectory);
  write_json(out / "report.json", report_to_json(report));
  for (const auto& [key, mask] : report.mask_grids) {
    write_pgm(out / "masks" / ("edge_" + std::to_string(key.first) + "_" + std::to_string(key.second) + ".pgm"), mask);
  }
  std::cout << "keyframes " << report.keyframe_trajectory.size() << ", ATE " << report.ate.rmse << '\n';
}

void cmd_eval(const fs::path& est, const fs::path& gt) {
  std::vector<std::string> warnings;
  const Trajectory e = read_tum(est, &warnings);
  const Trajectory g = read_tum(gt, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  std::cout << ate_to_json(evaluate_ate(e, g)).dump(2) << '\n';
}

void cmd_plot(const fs::path& report, const fs::path& out) {
  const std::string svg = report_svg(read_json(report));
  std::ofstream f(out);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + out.string());
  f << svg;
  if (!f) throw Error(ErrorCode::IoError, "failed writing " + out.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dense bundle adjustment on synthetic dynamic scenes"};
  app.require_subcommand(1);

  std::string spec, seq, config, out, est, gt, report;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic sequence from a scenario spec");
  gen->add_option("--spec", spec, "Scenario JSON")->required();
  gen->add_option("--out", out, "Output directory")->required();

  auto* run = app.add_subcommand("run", "Run visual odometry on a generated sequence");
  run->add_option("--seq", seq, "Sequence directory written by gen")->required();
  run->add_option("--config", config, "Pipeline JSON (defaults when omitted)");
  run->add_option("--out", out, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Absolute trajectory error between two TUM files");
  eval->add_option("--est", est, "Estimated trajectory")->required();
  eval->add_option("--gt", gt, "Ground-truth trajectory")->required();

  auto* plot = app.add_subcommand("plot", "SVG of a run's trajectory against ground truth");
  plot->add_option("--report", report, "report.json written by run")->required();
  plot->add_option("--out", out, "Output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*gen) cmd_gen(spec, out);
    if (*run) cmd_run(seq, config, out);
    if (*eval) cmd_eval(est, gt);
    if (*plot) cmd_plot(report, out);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return e.code() == ErrorCode::IoError ? kExitIo : kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return 0;
}
