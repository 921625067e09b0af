#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lookdev {

enum class ErrorCode {
  missing_file,
  unsupported_format,
  corrupt_data,
  unwritable_path,
  out_of_bounds,
  dimension_mismatch,
  invalid_argument,
  non_finite,
  parse_error,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::missing_file: return "missing_file";
    case ErrorCode::unsupported_format: return "unsupported_format";
    case ErrorCode::corrupt_data: return "corrupt_data";
    case ErrorCode::unwritable_path: return "unwritable_path";
    case ErrorCode::out_of_bounds: return "out_of_bounds";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::parse_error: return "parse_error";
  }
  return "unknown";
}

// Every failure in the library is reported through this type; code() lets
// callers tell the failure classes apart without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lookdev
