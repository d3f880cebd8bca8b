#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dynba {

enum class ErrorCode {
  NearPiRotation,
  NonPositiveDisparity,
  InvalidPixel,
  ShapeMismatch,
  EmptyProblem,
  SingularSystem,
  NonFiniteCost,
  UnknownKeyframe,
  DuplicateId,
  MissingGroundTruth,
  NonPositiveSigma,
  InvalidPattern,
  InvalidConfig,
  DegenerateGeometry,
  LengthMismatch,
  ParseError,
  NonUnitQuaternion,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and the CLI exit-code mapping) can dispatch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// what() without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace dynba
