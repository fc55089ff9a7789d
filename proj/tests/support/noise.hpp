#pragma once

// OCR noise model for robustness runs. Per token: dropped with probability
// `drop`; otherwise a substitution replaces a letter or digit by a random
// character of the same kind (same script and case for letters), and the
// confidence moves uniformly within +-`jitter`.
//
// With SubstitutionUnit::kToken a token receives one substitution with
// probability `substitute`. With kCharacter every letter or digit is
// substituted independently with that probability, which is far harsher.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "menulens/ocr.hpp"
#include "menulens/unicode.hpp"

namespace menulens::testing {

enum class SubstitutionUnit { kToken, kCharacter };

struct NoiseParams {
  SubstitutionUnit unit = SubstitutionUnit::kToken;
  double substitute = 0.05;
  double drop = 0.02;
  double jitter = 0.1;
};

// Replacement alphabet for `c`, or null when `c` is never substituted.
inline const std::u32string* substitution_pool(char32_t c) {
  static const std::u32string latin_lower = U"abcdefghijklmnopqrstuvwxyz";
  static const std::u32string latin_upper = U"ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  static const std::u32string greek_lower = U"αβγδεζηθικλμνξοπρστυφχψω";
  static const std::u32string greek_upper = U"ΑΒΓΔΕΖΗΘΙΚΛΜΝΞΟΠΡΣΤΥΦΧΨΩ";
  static const std::u32string digits = U"0123456789";
  if (c >= U'0' && c <= U'9') return &digits;
  if (!unicode::is_letter(c)) return nullptr;
  const bool upper = unicode::is_upper(c);
  if (unicode::is_greek(c)) return upper ? &greek_upper : &greek_lower;
  return upper ? &latin_upper : &latin_lower;
}

inline char32_t substitute_char(char32_t c, std::mt19937_64& rng) {
  const std::u32string* pool = substitution_pool(c);
  if (pool == nullptr) return c;
  std::uniform_int_distribution<std::size_t> pick(0, pool->size() - 1);
  char32_t out = c;
  while (out == c) out = (*pool)[pick(rng)];
  return out;
}

inline OcrDocument add_noise(const OcrDocument& doc, std::mt19937_64& rng,
                             const NoiseParams& params = {}) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> jitter(-params.jitter, params.jitter);
  OcrDocument out = doc;
  out.tokens.clear();
  for (const auto& token : doc.tokens) {
    if (unit(rng) < params.drop) continue;
    OcrToken noisy = token;
    std::u32string cps = unicode::to_code_points(token.text);
    if (params.unit == SubstitutionUnit::kCharacter) {
      for (auto& c : cps) {
        if (unit(rng) < params.substitute) c = substitute_char(c, rng);
      }
    } else if (unit(rng) < params.substitute) {
      std::vector<std::size_t> eligible;
      for (std::size_t i = 0; i < cps.size(); ++i) {
        if (substitution_pool(cps[i]) != nullptr) eligible.push_back(i);
      }
      if (!eligible.empty()) {
        const std::size_t at = eligible[std::uniform_int_distribution<std::size_t>(0, eligible.size() - 1)(rng)];
        cps[at] = substitute_char(cps[at], rng);
      }
    }
    noisy.text = unicode::from_code_points(cps);
    noisy.confidence = std::clamp(token.confidence + jitter(rng), 0.0, 1.0);
    out.tokens.push_back(std::move(noisy));
  }
  return out;
}

}  // namespace menulens::testing
