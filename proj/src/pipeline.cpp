#include "menulens/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "menulens/error.hpp"

namespace menulens {

PipelineResult run_document_pipeline(const OcrDocument& doc, std::optional<int> keyframe,
                                     const PipelineOptions& options) {
  PipelineResult result;
  result.keyframe = keyframe;
  result.layout = analyze_layout(doc, options.layout);
  MenuProvenance provenance{keyframe, doc.image_ref, MenuMethod::kGrammar, false};
  result.menu = options.llm != nullptr
                    ? llm_structure_menu(result.layout, options.llm, provenance, options.parse)
                    : build_menu(result.layout, provenance, options.parse);
  return result;
}

PipelineResult run_pipeline(const std::vector<Detection>& detections, const ImageDims& dims,
                            const OcrSource& ocr, const PipelineOptions& options) {
  const int frame = require_keyframe(detections, dims, options.keyframe);
  return run_document_pipeline(ocr(frame), frame, options);
}

OcrSource ocr_directory_source(const std::string& dir) {
  return [dir](int frame) {
    const std::filesystem::path base(dir);
    const std::string n = std::to_string(frame);
    for (const auto& name : {"frame_" + n + ".ocr.json", "frame_" + n + ".json", n + ".json"}) {
      const auto path = base / name;
      if (!std::filesystem::exists(path)) continue;
      std::ifstream in(path, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      return parse_ocr_document(ss.str());
    }
    throw Error(ErrorCode::kNotFound,
                "no OCR document for keyframe " + n + " in " + base.string());
  };
}

}  // namespace menulens
