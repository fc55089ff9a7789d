#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "menulens/frame_select.hpp"
#include "menulens/layout.hpp"
#include "menulens/menu.hpp"
#include "menulens/ocr.hpp"

namespace menulens {

struct PipelineOptions {
  KeyframeOptions keyframe;
  LayoutOptions layout;
  MenuParseOptions parse;
  /// Structure the menu with this model; grammar only when null.
  ChatClient* llm = nullptr;
};

struct PipelineResult {
  std::optional<int> keyframe;
  ReadingOrderDocument layout;
  DigitalMenu menu;
};

/// Supplies the OCR document for a frame; throws kNotFound when there is none.
using OcrSource = std::function<OcrDocument(int frame_index)>;

/// Keyframe selection -> OCR document of that frame -> layout -> menu.
/// Throws kNoMenuDetected, kNotFound (no OCR for the keyframe) or kEmptyMenu.
PipelineResult run_pipeline(const std::vector<Detection>& detections, const ImageDims& dims,
                            const OcrSource& ocr, const PipelineOptions& options = {});

/// Layout and menu structuring for an OCR document that is already the
/// keyframe (single image input).
PipelineResult run_document_pipeline(const OcrDocument& doc, std::optional<int> keyframe,
                                     const PipelineOptions& options = {});

/// Looks for frame_<N>.ocr.json, then frame_<N>.json, then <N>.json.
OcrSource ocr_directory_source(const std::string& dir);

}  // namespace menulens
