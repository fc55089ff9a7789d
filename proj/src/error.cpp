#include "menulens/error.hpp"

namespace menulens {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::kInvalidGeometry: return "INVALID_GEOMETRY";
    case ErrorCode::kParseError: return "PARSE_ERROR";
    case ErrorCode::kSchemaError: return "SCHEMA_ERROR";
    case ErrorCode::kEngineError: return "OCR_ENGINE_ERROR";
    case ErrorCode::kEngineTimeout: return "OCR_ENGINE_TIMEOUT";
    case ErrorCode::kNoMenuDetected: return "NO_MENU_DETECTED";
    case ErrorCode::kEmptyMenu: return "EMPTY_MENU";
    case ErrorCode::kDuplicateDoc: return "DUPLICATE_DOC";
    case ErrorCode::kNotFound: return "NOT_FOUND";
    case ErrorCode::kNoEligibleItems: return "NO_ELIGIBLE_ITEMS";
    case ErrorCode::kLlmUnavailable: return "LLM_UNAVAILABLE";
    case ErrorCode::kLlmRejected: return "LLM_REJECTED";
    case ErrorCode::kMissingTruth: return "MISSING_TRUTH";
    case ErrorCode::kIoError: return "IO_ERROR";
  }
  return "UNKNOWN";
}

}  // namespace menulens
