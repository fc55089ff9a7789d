#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "menulens/geometry.hpp"

namespace menulens {

struct Detection {
  int frame_index = 0;
  std::string label;
  double confidence = 0;
  BBox bbox;
};

struct FrameScore {
  int frame_index = 0;
  double centrality = 0;
  double confidence = 0;
};

struct KeyframeOptions {
  std::string target_label = "menu";
  double min_confidence = 0.5;
};

/// Normalised distance of the box centre from the image centre. Each axis is
/// scaled by the half-extent of the image, so the result lies in [0, sqrt(2)]
/// and 0 means perfectly centred. Throws kInvalidGeometry on zero-area boxes.
double centrality(const BBox& bbox, const ImageDims& dims);

/// Per-frame scores for qualifying detections. A frame with several
/// qualifying detections keeps its most central one (higher confidence on a
/// centrality tie). Output is sorted by frame index.
std::vector<FrameScore> score_frames(std::span<const Detection> detections,
                                     const ImageDims& dims,
                                     const KeyframeOptions& options = {});

/// Frame whose target detection is most central; ties go to higher
/// confidence, then to the earlier frame. Empty when nothing qualifies.
std::optional<int> select_keyframe(std::span<const Detection> detections,
                                   const ImageDims& dims,
                                   const KeyframeOptions& options = {});

/// Like select_keyframe but throws kNoMenuDetected instead of returning empty.
int require_keyframe(std::span<const Detection> detections, const ImageDims& dims,
                     const KeyframeOptions& options = {});

// Wire format: {frame_index, label, confidence, bbox: [x0, y0, x1, y1]}.
Detection detection_from_json(const nlohmann::json& j);
std::vector<Detection> detections_from_json(const nlohmann::json& j);
ImageDims dims_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Detection& d);
nlohmann::json to_json(const ImageDims& dims);

}  // namespace menulens
