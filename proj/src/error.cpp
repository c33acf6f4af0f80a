#include "mapss/error.hpp"

namespace mapss {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformed: return "malformed";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDuplicateId: return "duplicate_id";
    case ErrorCode::kDanglingReference: return "dangling_reference";
    case ErrorCode::kUnitMismatch: return "unit_mismatch";
    case ErrorCode::kSpecInvalid: return "spec_invalid";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kInvalidState: return "invalid_state";
    case ErrorCode::kStaleVariant: return "stale_variant";
    case ErrorCode::kUnsatisfiableRole: return "unsatisfiable_role";
    case ErrorCode::kBoundExceeded: return "bound_exceeded";
    case ErrorCode::kEvaluation: return "evaluation_error";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

std::optional<ErrorCode> parse_error_code(std::string_view token) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::kIo); ++i) {
    const auto code = static_cast<ErrorCode>(i);
    if (to_string(code) == token) return code;
  }
  return std::nullopt;
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformed:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kDuplicateId:
    case ErrorCode::kDanglingReference:
    case ErrorCode::kUnitMismatch:
    case ErrorCode::kSpecInvalid:
    case ErrorCode::kBoundExceeded:
      return true;
    default:
      return false;
  }
}

}  // namespace mapss
