#pragma once

#include <random>
#include <string>
#include <vector>

#include "menulens/layout.hpp"
#include "support/test_support.hpp"

namespace menulens::testing {

/// Random menu-like page of at most `max_tokens` tokens: one to three column
/// starts, rows on a loose grid with vertical jitter, one to three words per
/// row. Token texts are unique.
inline std::vector<OcrToken> random_layout(std::mt19937_64& rng, std::size_t max_tokens,
                                           double page_width = 1000) {
  std::uniform_int_distribution<int> columns(1, 3);
  std::uniform_int_distribution<int> words(1, 3);
  std::uniform_real_distribution<double> jitter(-6, 6);
  std::uniform_real_distribution<double> height(18, 30);
  std::uniform_real_distribution<double> width(30, 90);
  const int ncols = columns(rng);
  const double col_step = page_width / 3.0;
  std::vector<OcrToken> tokens;
  int row = 0;
  while (tokens.size() < max_tokens) {
    const int col = std::uniform_int_distribution<int>(0, ncols - 1)(rng);
    const double y = 80 + 55 * row + jitter(rng);
    double x = 40 + col * col_step + jitter(rng) * 3;
    const int n = words(rng);
    for (int w = 0; w < n && tokens.size() < max_tokens; ++w) {
      const double h = height(rng);
      const double wd = width(rng);
      tokens.push_back(token("t" + std::to_string(tokens.size()), x, y, x + wd, y + h,
                             0.5 + 0.05 * static_cast<double>(tokens.size() % 10)));
      x += wd + 12;
    }
    if (std::uniform_int_distribution<int>(0, 2)(rng) != 0) ++row;
  }
  return tokens;
}

/// Library pipeline reduced to token texts per line in reading order.
inline std::vector<std::vector<std::string>> library_order(const std::vector<OcrToken>& tokens,
                                                           double page_width = 1000) {
  auto lines = group_into_lines(tokens);
  auto bounds = detect_columns(lines, page_width);
  const ReadingOrderDocument doc = reading_order(std::move(lines), std::move(bounds));
  std::vector<std::vector<std::string>> out;
  for (const auto& line : doc.lines) {
    std::vector<std::string> texts;
    for (const auto& t : line.tokens) texts.push_back(t.text);
    out.push_back(texts);
  }
  return out;
}

}  // namespace menulens::testing
