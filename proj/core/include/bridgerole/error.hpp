#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bridgerole {

enum class ErrorCode {
  kInvalidArgument,
  kOutOfZone,
  kMalformedFeature,
  kEmptyNetwork,
  kUnknownCategory,
  kNoStreetsAvailable,
  kDimensionMismatch,
  kEmptyEdgeSet,
  kNonFiniteLoss,
  kDegenerateData,
  kTooFewPoints,
  kKTooLarge,
  kUndefined,
  kConstantInput,
  kInvalidK,
  kInvalidConfig,
  kIo,
  kFormat,
  kPortInUse,
  kNetwork,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library. `code()` identifies the failure;
/// `stage()` is filled in by the pipeline when an error crosses a stage
/// boundary so CLI users can tell which step failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  Error(ErrorCode code, std::string stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), code_(code), stage_(std::move(stage)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  ErrorCode code_;
  std::string stage_;
};

}  // namespace bridgerole
