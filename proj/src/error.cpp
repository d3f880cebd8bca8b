#include "dynba/error.hpp"

namespace dynba {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NearPiRotation: return "NearPiRotation";
    case ErrorCode::NonPositiveDisparity: return "NonPositiveDisparity";
    case ErrorCode::InvalidPixel: return "InvalidPixel";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyProblem: return "EmptyProblem";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NonFiniteCost: return "NonFiniteCost";
    case ErrorCode::UnknownKeyframe: return "UnknownKeyframe";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::MissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::NonPositiveSigma: return "NonPositiveSigma";
    case ErrorCode::InvalidPattern: return "InvalidPattern";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonUnitQuaternion: return "NonUnitQuaternion";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace dynba
