#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "menulens/ocr.hpp"

namespace menulens {

struct TextLine {
  std::vector<OcrToken> tokens;  // sorted left to right
  BBox bbox;
  double baseline_y = 0;  // median of token vertical centres
  double mean_confidence = 0;

  std::string text() const;
};

struct ColumnBounds {
  double x_start = 0;
  double x_end = 0;
  friend bool operator==(const ColumnBounds&, const ColumnBounds&) = default;
};

struct ReadingOrderDocument {
  std::vector<TextLine> lines;
  std::vector<ColumnBounds> column_bounds;
  std::vector<int> column_of_line;
};

struct LayoutOptions {
  /// Tokens share a line when their vertical overlap reaches this fraction
  /// of the shorter token's height.
  double line_overlap = 0.5;
  /// A gap between sorted line starts of at least this fraction of the page
  /// width opens a new column.
  double column_gap = 0.15;
  int max_columns = 3;
};

/// Groups tokens into lines by transitive vertical overlap. Lines are ordered
/// top to bottom (baseline, then left edge). Never drops a token.
std::vector<TextLine> group_into_lines(std::span<const OcrToken> tokens,
                                       const LayoutOptions& options = {});

/// Clusters line left edges into at most `max_columns` columns, left to right.
/// Each column spans the left edges of its member lines.
std::vector<ColumnBounds> detect_columns(std::span<const TextLine> lines, double page_width,
                                         const LayoutOptions& options = {});

/// Column-major ordering: column 0 top to bottom, then column 1, ...
ReadingOrderDocument reading_order(std::vector<TextLine> lines,
                                   std::vector<ColumnBounds> column_bounds);

/// group_into_lines + detect_columns + reading_order.
ReadingOrderDocument analyze_layout(const OcrDocument& doc, const LayoutOptions& options = {});

std::string lines_to_text(const ReadingOrderDocument& doc);

nlohmann::json to_json(const ReadingOrderDocument& doc);

}  // namespace menulens
