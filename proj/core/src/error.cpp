#include "bridgerole/error.hpp"

namespace bridgerole {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kOutOfZone: return "OutOfZone";
    case ErrorCode::kMalformedFeature: return "MalformedFeature";
    case ErrorCode::kEmptyNetwork: return "EmptyNetwork";
    case ErrorCode::kUnknownCategory: return "UnknownCategory";
    case ErrorCode::kNoStreetsAvailable: return "NoStreetsAvailable";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyEdgeSet: return "EmptyEdgeSet";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kDegenerateData: return "DegenerateData";
    case ErrorCode::kTooFewPoints: return "TooFewPoints";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kUndefined: return "Undefined";
    case ErrorCode::kConstantInput: return "ConstantInput";
    case ErrorCode::kInvalidK: return "InvalidK";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kFormat: return "Format";
    case ErrorCode::kPortInUse: return "PortInUse";
    case ErrorCode::kNetwork: return "Network";
  }
  return "Unknown";
}

}  // namespace bridgerole
