#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mapss {

enum class ErrorCode {
  kMalformed,
  kInvalidArgument,
  kDuplicateId,
  kDanglingReference,
  kUnitMismatch,
  kSpecInvalid,
  kNotFound,
  kInvalidState,
  kStaleVariant,
  kUnsatisfiableRole,
  kBoundExceeded,
  kEvaluation,
  kIo,
};

std::string_view to_string(ErrorCode code);
std::optional<ErrorCode> parse_error_code(std::string_view token);

// True for errors caused by the caller's input (documents, arguments).
bool is_validation_error(ErrorCode code);

// Every recoverable failure in the engine is reported through this type. The
// detail string carries a machine-oriented locator (JSON pointer, role name,
// offending id) when one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string detail = {})
      : std::runtime_error(std::move(message)), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace mapss
