#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dynba/eval.hpp"

namespace dynba {

/// Reads `timestamp tx ty tz qx qy qz qw` lines; '#' comments and blank lines are skipped.
/// Quaternions off unit norm by at most 1e-3 are renormalized (with a warning appended when the
/// deviation exceeds 1e-6); larger deviations raise NonUnitQuaternion. Malformed lines raise
/// ParseError naming the line number.
Trajectory read_tum(std::istream& in, std::vector<std::string>* warnings = nullptr);
Trajectory read_tum(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

/// Fixed nine-decimal output, one pose per line.
void write_tum(std::ostream& out, const Trajectory& trajectory);
void write_tum(const std::filesystem::path& path, const Trajectory& trajectory);

}  // namespace dynba
