#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace menulens {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidGeometry,
  kParseError,
  kSchemaError,
  kEngineError,
  kEngineTimeout,
  kNoMenuDetected,
  kEmptyMenu,
  kDuplicateDoc,
  kNotFound,
  kNoEligibleItems,
  kLlmUnavailable,
  kLlmRejected,
  kMissingTruth,
  kIoError,
};

/// SCREAMING_SNAKE name used in service error bodies and CLI diagnostics.
std::string_view error_code_name(ErrorCode code);

/// Single exception type for every reportable pipeline condition. `field`
/// names the offending schema field for kSchemaError; `offset` is the byte
/// offset for kParseError.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  static Error schema(const std::string& field, const std::string& detail = {}) {
    Error e(ErrorCode::kSchemaError,
            detail.empty() ? "schema violation at '" + field + "'"
                           : "schema violation at '" + field + "': " + detail);
    e.field_ = field;
    return e;
  }

  static Error parse(std::size_t offset, const std::string& detail) {
    Error e(ErrorCode::kParseError,
            "parse error at byte " + std::to_string(offset) + ": " + detail);
    e.offset_ = offset;
    return e;
  }

  ErrorCode code() const noexcept { return code_; }
  std::string_view code_name() const { return error_code_name(code_); }
  const std::optional<std::string>& field() const noexcept { return field_; }
  const std::optional<std::size_t>& offset() const noexcept { return offset_; }

 private:
  ErrorCode code_;
  std::optional<std::string> field_;
  std::optional<std::size_t> offset_;
};

}  // namespace menulens
