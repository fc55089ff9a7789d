#include "menulens/layout.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

namespace menulens {
namespace {

struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Total order on tokens so that line contents do not depend on input order.
bool token_before(const OcrToken& a, const BBox& ab, const OcrToken& b, const BBox& bb) {
  return std::tie(ab.x_min, ab.y_min, ab.x_max, ab.y_max, a.text, a.confidence) <
         std::tie(bb.x_min, bb.y_min, bb.x_max, bb.y_max, b.text, b.confidence);
}

bool line_before(const TextLine& a, const TextLine& b) {
  if (a.baseline_y != b.baseline_y) return a.baseline_y < b.baseline_y;
  if (a.bbox.x_min != b.bbox.x_min) return a.bbox.x_min < b.bbox.x_min;
  return a.text() < b.text();
}

TextLine make_line(std::vector<std::pair<OcrToken, BBox>> members) {
  std::sort(members.begin(), members.end(), [](const auto& a, const auto& b) {
    return token_before(a.first, a.second, b.first, b.second);
  });
  TextLine line;
  line.bbox = members.front().second;
  std::vector<double> centers;
  double conf_sum = 0;
  for (auto& [token, box] : members) {
    line.bbox = line.bbox.united(box);
    centers.push_back(box.center_y());
    conf_sum += token.confidence;
    line.tokens.push_back(std::move(token));
  }
  std::sort(centers.begin(), centers.end());
  const std::size_t n = centers.size();
  line.baseline_y = n % 2 == 1 ? centers[n / 2] : (centers[n / 2 - 1] + centers[n / 2]) / 2.0;
  line.mean_confidence = conf_sum / static_cast<double>(n);
  return line;
}

double distance_to_span(double x, const ColumnBounds& c) {
  if (x < c.x_start) return c.x_start - x;
  if (x > c.x_end) return x - c.x_end;
  return 0.0;
}

}  // namespace

std::string TextLine::text() const {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t.text;
  }
  return out;
}

std::vector<TextLine> group_into_lines(std::span<const OcrToken> tokens,
                                       const LayoutOptions& options) {
  const std::size_t n = tokens.size();
  std::vector<BBox> boxes;
  boxes.reserve(n);
  for (const auto& t : tokens) boxes.push_back(t.bbox());

  DisjointSet sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double overlap = std::min(boxes[i].y_max, boxes[j].y_max) -
                             std::max(boxes[i].y_min, boxes[j].y_min);
      const double shorter = std::min(boxes[i].height(), boxes[j].height());
      if (overlap >= options.line_overlap * shorter) sets.unite(i, j);
    }
  }

  std::vector<std::vector<std::pair<OcrToken, BBox>>> groups(n);
  for (std::size_t i = 0; i < n; ++i) groups[sets.find(i)].emplace_back(tokens[i], boxes[i]);

  std::vector<TextLine> lines;
  for (auto& g : groups) {
    if (!g.empty()) lines.push_back(make_line(std::move(g)));
  }
  std::sort(lines.begin(), lines.end(), line_before);
  return lines;
}

std::vector<ColumnBounds> detect_columns(std::span<const TextLine> lines, double page_width,
                                         const LayoutOptions& options) {
  std::vector<double> starts;
  starts.reserve(lines.size());
  for (const auto& l : lines) starts.push_back(l.bbox.x_min);
  std::sort(starts.begin(), starts.end());
  if (starts.empty()) return {};

  const double min_gap = options.column_gap * page_width;
  std::vector<ColumnBounds> columns{{starts.front(), starts.front()}};
  for (std::size_t i = 1; i < starts.size(); ++i) {
    if (starts[i] - starts[i - 1] >= min_gap) {
      columns.push_back({starts[i], starts[i]});
    } else {
      columns.back().x_end = starts[i];
    }
  }
  while (columns.size() > static_cast<std::size_t>(std::max(1, options.max_columns))) {
    std::size_t best = 0;
    for (std::size_t i = 1; i + 1 < columns.size(); ++i) {
      if (columns[i + 1].x_start - columns[i].x_end <
          columns[best + 1].x_start - columns[best].x_end) {
        best = i;
      }
    }
    columns[best].x_end = columns[best + 1].x_end;
    columns.erase(columns.begin() + static_cast<std::ptrdiff_t>(best + 1));
  }
  return columns;
}

ReadingOrderDocument reading_order(std::vector<TextLine> lines,
                                   std::vector<ColumnBounds> column_bounds) {
  ReadingOrderDocument doc;
  doc.column_bounds = std::move(column_bounds);
  if (lines.empty()) return doc;
  if (doc.column_bounds.empty()) {
    doc.column_bounds.push_back({lines.front().bbox.x_min, lines.front().bbox.x_min});
  }

  std::vector<std::pair<int, TextLine>> assigned;
  assigned.reserve(lines.size());
  for (auto& line : lines) {
    int column = 0;
    double best = distance_to_span(line.bbox.x_min, doc.column_bounds[0]);
    for (std::size_t c = 1; c < doc.column_bounds.size(); ++c) {
      const double d = distance_to_span(line.bbox.x_min, doc.column_bounds[c]);
      if (d < best) {
        best = d;
        column = static_cast<int>(c);
      }
    }
    assigned.emplace_back(column, std::move(line));
  }
  std::stable_sort(assigned.begin(), assigned.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return line_before(a.second, b.second);
  });
  for (auto& [column, line] : assigned) {
    doc.column_of_line.push_back(column);
    doc.lines.push_back(std::move(line));
  }
  return doc;
}

ReadingOrderDocument analyze_layout(const OcrDocument& doc, const LayoutOptions& options) {
  auto lines = group_into_lines(doc.tokens, options);
  auto columns = detect_columns(lines, static_cast<double>(doc.dims.width), options);
  return reading_order(std::move(lines), std::move(columns));
}

std::string lines_to_text(const ReadingOrderDocument& doc) {
  std::string out;
  for (std::size_t i = 0; i < doc.lines.size(); ++i) {
    if (i > 0) out += '\n';
    out += doc.lines[i].text();
  }
  return out;
}

nlohmann::json to_json(const ReadingOrderDocument& doc) {
  nlohmann::json lines = nlohmann::json::array();
  for (std::size_t i = 0; i < doc.lines.size(); ++i) {
    const auto& l = doc.lines[i];
    nlohmann::json tokens = nlohmann::json::array();
    for (const auto& t : l.tokens) tokens.push_back(to_json(t));
    lines.push_back({{"index", i},
                     {"column", doc.column_of_line[i]},
                     {"text", l.text()},
                     {"bbox", {l.bbox.x_min, l.bbox.y_min, l.bbox.x_max, l.bbox.y_max}},
                     {"baseline_y", l.baseline_y},
                     {"mean_confidence", l.mean_confidence},
                     {"tokens", tokens}});
  }
  nlohmann::json columns = nlohmann::json::array();
  for (const auto& c : doc.column_bounds) columns.push_back({c.x_start, c.x_end});
  return {{"columns", columns}, {"lines", lines}};
}

}  // namespace menulens
