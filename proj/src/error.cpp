#include "nbvcalib/error.hpp"

namespace nbvcalib {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kAngleAtPi: return "AngleAtPi";
    case ErrorCode::kBehindCamera: return "BehindCamera";
    case ErrorCode::kBadDimensions: return "BadDimensions";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEmptyCandidateSet: return "EmptyCandidateSet";
    case ErrorCode::kMarkerOutOfView: return "MarkerOutOfView";
    case ErrorCode::kUnknownMarker: return "UnknownMarker";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kDegenerateMotion: return "DegenerateMotion";
    case ErrorCode::kDegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::kSingularInformation: return "SingularInformation";
    case ErrorCode::kCandidateInvisible: return "CandidateInvisible";
    case ErrorCode::kNoEvaluableCandidates: return "NoEvaluableCandidates";
    case ErrorCode::kExhausted: return "Exhausted";
    case ErrorCode::kInsufficientFrames: return "InsufficientFrames";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kInvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

}  // namespace nbvcalib
