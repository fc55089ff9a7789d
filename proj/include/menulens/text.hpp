#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Text normalisation shared by menu tagging, preference retrieval and
// evaluation.
namespace menulens {

/// NFKC, case fold, split on anything that is not a Unicode letter or number.
/// No stemming, no stop words. Diacritics are kept.
std::vector<std::string> tokenize(std::string_view text);

/// NFKD, drop combining marks, case fold, drop punctuation, collapse runs of
/// whitespace into one space and trim. "Café  Frappé" -> "cafe frappe".
std::string normalize_name(std::string_view text);

/// Unit-cost edit distance over code points.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);
std::size_t levenshtein(std::string_view a, std::string_view b);

/// 1 - d / max(|a|, |b|) on normalize_name'd inputs; 1.0 when both are empty.
double name_similarity(std::string_view a, std::string_view b);

}  // namespace menulens
