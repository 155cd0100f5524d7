#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nbvcalib {

enum class ErrorCode {
  kAngleAtPi,
  kBehindCamera,
  kBadDimensions,
  kInvalidArgument,
  kEmptyCandidateSet,
  kMarkerOutOfView,
  kUnknownMarker,
  kSingularSystem,
  kDegenerateMotion,
  kDegenerateConfiguration,
  kSingularInformation,
  kCandidateInvisible,
  kNoEvaluableCandidates,
  kExhausted,
  kInsufficientFrames,
  kDegenerateInput,
  kParseError,
  kVersionMismatch,
  kInvariantViolation,
};

std::string_view to_string(ErrorCode code);

// Every library failure is reported through this type; `code()` identifies the
// failure class so callers can branch without parsing messages.
class CalibrationError : public std::runtime_error {
 public:
  CalibrationError(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nbvcalib
