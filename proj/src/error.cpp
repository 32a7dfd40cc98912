#include "momt/error.hpp"

namespace momt {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::kNonPositiveDensity: return "NonPositiveDensity";
    case ErrorCode::kKernelAssumption: return "KernelAssumption";
    case ErrorCode::kFactorizationFailed: return "FactorizationFailed";
    case ErrorCode::kBreakdownDetected: return "BreakdownDetected";
    case ErrorCode::kLineSearchFailed: return "LineSearchFailed";
    case ErrorCode::kPositivityLost: return "PositivityLost";
    case ErrorCode::kInvalidContrast: return "InvalidContrast";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kFormatError: return "FormatError";
  }
  return "Unknown";
}

}  // namespace momt
