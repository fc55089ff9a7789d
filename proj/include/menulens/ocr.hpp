#pragma once

#include <array>
#include <chrono>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "menulens/geometry.hpp"

namespace menulens {

/// Four corners, clockwise from top-left.
using Quad = std::array<Point, 4>;

struct OcrToken {
  std::string text;
  Quad quad{};
  double confidence = 0;

  BBox bbox() const;
};

struct OcrDocument {
  std::string image_ref;
  ImageDims dims;
  std::vector<OcrToken> tokens;
};

/// Element-wise min/max envelope; throws kInvalidGeometry when it has no area.
BBox quad_to_bbox(const Quad& quad);

/// Parses the canonical OCR JSON. Text is NFC-normalised, token order is
/// preserved and quads are clamped into the image. Throws kParseError for
/// malformed JSON and kSchemaError naming the field for schema violations.
OcrDocument parse_ocr_document(std::string_view bytes);
OcrDocument ocr_document_from_json(const nlohmann::json& j);

nlohmann::json to_json(const OcrToken& token);
nlohmann::json to_json(const OcrDocument& doc);
std::string serialize_ocr_document(const OcrDocument& doc);

struct ExternalOcrOptions {
  /// Shell command; every "{image}" is replaced by the quoted image path.
  std::string command_template;
  std::chrono::milliseconds timeout{60'000};
};

/// Runs an external OCR engine that prints canonical JSON on stdout.
/// kEngineError on nonzero exit (message carries stderr), kEngineTimeout
/// when the deadline passes, kParseError/kSchemaError on bad output.
OcrDocument run_external_ocr(const std::string& image_path, const ExternalOcrOptions& options);

/// Template from the explicit flag value, else MENULENS_OCR_CMD, else empty.
std::string resolve_ocr_command(const std::string& flag_value);

}  // namespace menulens
