#include "menulens/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <numeric>

#include "menulens/unicode.hpp"

namespace menulens {
namespace {

std::string nfkd(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFKDInstance(status);
  icu::UnicodeString out = norm->normalize(
      icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size()))),
      status);
  std::string utf8;
  out.toUTF8String(utf8);
  return utf8;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  const std::u32string cps = unicode::to_code_points(unicode::casefold(unicode::nfkc(text)));
  std::vector<std::string> out;
  std::u32string current;
  for (char32_t c : cps) {
    if (unicode::is_alnum(c)) {
      current.push_back(c);
    } else if (!current.empty()) {
      out.push_back(unicode::from_code_points(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(unicode::from_code_points(current));
  return out;
}

std::string normalize_name(std::string_view text) {
  const std::u32string decomposed = unicode::to_code_points(nfkd(text));
  std::u32string stripped;
  stripped.reserve(decomposed.size());
  for (char32_t c : decomposed) {
    if (u_charType(static_cast<UChar32>(c)) == U_NON_SPACING_MARK) continue;
    stripped.push_back(c);
  }
  const std::u32string folded =
      unicode::to_code_points(unicode::casefold(unicode::from_code_points(stripped)));
  std::u32string out;
  bool pending_space = false;
  for (char32_t c : folded) {
    if (unicode::is_punct(c)) continue;
    if (unicode::is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  return unicode::from_code_points(out);
}

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(unicode::to_code_points(a), unicode::to_code_points(b));
}

double name_similarity(std::string_view a, std::string_view b) {
  const std::u32string na = unicode::to_code_points(normalize_name(a));
  const std::u32string nb = unicode::to_code_points(normalize_name(b));
  const std::size_t longest = std::max(na.size(), nb.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(na, nb)) / static_cast<double>(longest);
}

}  // namespace menulens
