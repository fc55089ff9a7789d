#include "menulens/ocr.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "json_util.hpp"
#include "menulens/frame_select.hpp"
#include "menulens/error.hpp"
#include "menulens/unicode.hpp"
#include "subprocess.hpp"

namespace menulens {

BBox quad_to_bbox(const Quad& quad) {
  BBox box{quad[0].x, quad[0].y, quad[0].x, quad[0].y};
  for (const auto& p : quad) {
    box.x_min = std::min(box.x_min, p.x);
    box.y_min = std::min(box.y_min, p.y);
    box.x_max = std::max(box.x_max, p.x);
    box.y_max = std::max(box.y_max, p.y);
  }
  if (!box.has_area()) {
    throw Error(ErrorCode::kInvalidGeometry, "quad envelope has zero area");
  }
  return box;
}

BBox OcrToken::bbox() const { return quad_to_bbox(quad); }

namespace {

Quad quad_from_json(const nlohmann::json& j, const ImageDims& dims) {
  if (!j.is_array() || j.size() != 4) throw Error::schema("quad", "expected 4 points");
  Quad quad{};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& p = j[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw Error::schema("quad", "each point must be [x, y]");
    }
    quad[i] = {std::clamp(p[0].get<double>(), 0.0, static_cast<double>(dims.width)),
               std::clamp(p[1].get<double>(), 0.0, static_cast<double>(dims.height))};
  }
  try {
    quad_to_bbox(quad);
  } catch (const Error&) {
    throw Error::schema("quad", "envelope has zero area inside the image");
  }
  return quad;
}

}  // namespace

OcrDocument ocr_document_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error::schema("$", "expected an object");
  OcrDocument doc;
  doc.image_ref = detail::require_string(j, "image_ref");
  doc.dims = dims_from_json(detail::require(j, "dims"));
  const auto& tokens = detail::require_array(j, "tokens");
  std::set<std::string> seen_ids;
  doc.tokens.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!t.is_object()) throw Error::schema("tokens", "expected objects");
    if (auto id = t.find("id"); id != t.end()) {
      const std::string key = id->is_string() ? id->get<std::string>() : id->dump();
      if (!seen_ids.insert(key).second) throw Error::schema("id", "duplicate token id " + key);
    }
    OcrToken token;
    const std::string raw_text = detail::require_string(t, "text");
    if (!unicode::is_valid_utf8(raw_text)) throw Error::schema("text", "invalid UTF-8");
    token.text = unicode::nfc(raw_text);
    if (unicode::trim(token.text).empty()) throw Error::schema("text", "empty");
    token.confidence = detail::require_number(t, "confidence");
    if (token.confidence < 0.0 || token.confidence > 1.0) {
      throw Error::schema("confidence", "must lie in [0, 1]");
    }
    token.quad = quad_from_json(detail::require(t, "quad"), doc.dims);
    doc.tokens.push_back(std::move(token));
  }
  return doc;
}

OcrDocument parse_ocr_document(std::string_view bytes) {
  if (!unicode::is_valid_utf8(bytes)) {
    throw Error::parse(0, "input is not valid UTF-8");
  }
  return ocr_document_from_json(detail::parse_json(bytes));
}

nlohmann::json to_json(const OcrToken& token) {
  nlohmann::json quad = nlohmann::json::array();
  for (const auto& p : token.quad) quad.push_back({p.x, p.y});
  return {{"text", token.text}, {"quad", quad}, {"confidence", token.confidence}};
}

nlohmann::json to_json(const OcrDocument& doc) {
  nlohmann::json tokens = nlohmann::json::array();
  for (const auto& t : doc.tokens) tokens.push_back(to_json(t));
  return {{"image_ref", doc.image_ref}, {"dims", to_json(doc.dims)}, {"tokens", tokens}};
}

std::string serialize_ocr_document(const OcrDocument& doc) { return to_json(doc).dump(2); }

OcrDocument run_external_ocr(const std::string& image_path, const ExternalOcrOptions& options) {
  const std::string placeholder = "{image}";
  if (options.command_template.find(placeholder) == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument,
                "OCR command template must contain the {image} placeholder");
  }
  std::string command = options.command_template;
  const std::string quoted = detail::shell_quote(image_path);
  for (std::size_t pos = command.find(placeholder); pos != std::string::npos;
       pos = command.find(placeholder, pos + quoted.size())) {
    command.replace(pos, placeholder.size(), quoted);
  }
  const auto result = detail::run_shell(command, options.timeout);
  if (result.timed_out) {
    throw Error(ErrorCode::kEngineTimeout,
                "OCR engine exceeded " + std::to_string(options.timeout.count()) + " ms");
  }
  if (result.exit_code != 0) {
    throw Error(ErrorCode::kEngineError, "OCR engine exited with status " +
                                             std::to_string(result.exit_code) + ": " +
                                             result.stderr_data);
  }
  return parse_ocr_document(result.stdout_data);
}

std::string resolve_ocr_command(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("MENULENS_OCR_CMD"); env != nullptr) return env;
  return {};
}

}  // namespace menulens
