#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <json.hpp>

#include "dynba/eval.hpp"
#include "dynba/pipeline.hpp"
#include "dynba/synth.hpp"

namespace dynba {

inline constexpr const char* kScenarioSchema = "dynba.scenario/1";
inline constexpr const char* kPipelineSchema = "dynba.pipeline/1";
inline constexpr const char* kReportSchema = "dynba.report/1";

/// Missing keys keep their defaults; unknown keys and a wrong `schema` throw InvalidConfig.
ScenarioSpec scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioSpec& spec);

PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json pipeline_config_to_json(const PipelineConfig& config);

nlohmann::json ate_to_json(const AteReport& report);
nlohmann::json report_to_json(const RunReport& report);

/// Reads a JSON file; IoError when unreadable, ParseError on malformed text.
nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// DYNBA_SEED, when set; InvalidConfig if it is not an unsigned integer.
std::optional<std::uint64_t> seed_override();
/// Replaces spec.seed with DYNBA_SEED when the variable is set.
void apply_seed_override(ScenarioSpec& spec);

/// Binary P5 grayscale, values in [0, 1] scaled to 0..255.
void write_pgm(std::ostream& out, const ScalarGrid& grid);
void write_pgm(const std::filesystem::path& path, const ScalarGrid& grid);

}  // namespace dynba
