#include "menulens/frame_select.hpp"

#include <cmath>
#include <map>
#include <tuple>

#include "json_util.hpp"
#include "menulens/error.hpp"

namespace menulens {

double centrality(const BBox& bbox, const ImageDims& dims) {
  if (!bbox.has_area()) {
    throw Error(ErrorCode::kInvalidGeometry, "bounding box has zero area");
  }
  if (!dims.valid()) {
    throw Error(ErrorCode::kInvalidGeometry, "image dimensions must be positive");
  }
  const double half_w = dims.width / 2.0;
  const double half_h = dims.height / 2.0;
  const double dx = (bbox.center_x() - half_w) / half_w;
  const double dy = (bbox.center_y() - half_h) / half_h;
  return std::hypot(dx, dy);
}

std::vector<FrameScore> score_frames(std::span<const Detection> detections,
                                     const ImageDims& dims,
                                     const KeyframeOptions& options) {
  if (options.min_confidence < 0.0 || options.min_confidence > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "min_confidence must lie in [0, 1]");
  }
  std::map<int, FrameScore> best;
  for (const auto& d : detections) {
    if (d.label != options.target_label || d.confidence < options.min_confidence) continue;
    const FrameScore score{d.frame_index, centrality(d.bbox, dims), d.confidence};
    auto [it, inserted] = best.try_emplace(d.frame_index, score);
    if (inserted) continue;
    FrameScore& cur = it->second;
    if (score.centrality < cur.centrality ||
        (score.centrality == cur.centrality && score.confidence > cur.confidence)) {
      cur = score;
    }
  }
  std::vector<FrameScore> out;
  out.reserve(best.size());
  for (const auto& [_, s] : best) out.push_back(s);
  return out;
}

std::optional<int> select_keyframe(std::span<const Detection> detections,
                                   const ImageDims& dims,
                                   const KeyframeOptions& options) {
  const auto scores = score_frames(detections, dims, options);
  if (scores.empty()) return std::nullopt;
  auto key = [](const FrameScore& s) {
    return std::make_tuple(s.centrality, -s.confidence, s.frame_index);
  };
  const FrameScore* winner = &scores.front();
  for (const auto& s : scores) {
    if (key(s) < key(*winner)) winner = &s;
  }
  return winner->frame_index;
}

int require_keyframe(std::span<const Detection> detections, const ImageDims& dims,
                     const KeyframeOptions& options) {
  auto frame = select_keyframe(detections, dims, options);
  if (!frame) {
    throw Error(ErrorCode::kNoMenuDetected,
                "no '" + options.target_label + "' detection with confidence >= " +
                    std::to_string(options.min_confidence));
  }
  return *frame;
}

Detection detection_from_json(const nlohmann::json& j) {
  Detection d;
  const long long frame = detail::require_integer(j, "frame_index");
  if (frame < 0) throw Error::schema("frame_index", "must be >= 0");
  d.frame_index = static_cast<int>(frame);
  d.label = detail::require_string(j, "label");
  d.confidence = detail::require_number(j, "confidence");
  if (d.confidence < 0.0 || d.confidence > 1.0) {
    throw Error::schema("confidence", "must lie in [0, 1]");
  }
  const auto& box = detail::require_array(j, "bbox");
  if (box.size() != 4) throw Error::schema("bbox", "expected 4 numbers");
  for (const auto& v : box) {
    if (!v.is_number()) throw Error::schema("bbox", "expected 4 numbers");
  }
  d.bbox = {box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
            box[3].get<double>()};
  if (!d.bbox.has_area()) throw Error::schema("bbox", "requires x_min < x_max and y_min < y_max");
  return d;
}

std::vector<Detection> detections_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error::schema("detections", "expected an array");
  std::vector<Detection> out;
  out.reserve(j.size());
  for (const auto& item : j) out.push_back(detection_from_json(item));
  return out;
}

ImageDims dims_from_json(const nlohmann::json& j) {
  ImageDims dims;
  const long long w = detail::require_integer(j, "width");
  const long long h = detail::require_integer(j, "height");
  if (w <= 0) throw Error::schema("width", "must be > 0");
  if (h <= 0) throw Error::schema("height", "must be > 0");
  dims.width = static_cast<int>(w);
  dims.height = static_cast<int>(h);
  return dims;
}

nlohmann::json to_json(const Detection& d) {
  return {{"frame_index", d.frame_index},
          {"label", d.label},
          {"confidence", d.confidence},
          {"bbox", {d.bbox.x_min, d.bbox.y_min, d.bbox.x_max, d.bbox.y_max}}};
}

nlohmann::json to_json(const ImageDims& dims) {
  return {{"width", dims.width}, {"height", dims.height}};
}

}  // namespace menulens
