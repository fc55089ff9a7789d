#include "menulens/menu.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "menulens/error.hpp"
#include "menulens/text.hpp"
#include "menulens/unicode.hpp"

namespace menulens {
namespace {

struct Marker {
  std::u32string_view text;
  std::string_view code;
};

constexpr std::array<Marker, 5> kSymbolMarkers{{
    {U"€", "EUR"},
    {U"$", "USD"},
    {U"£", "GBP"},
    {U"zł", "PLN"},
    {U"zl", "PLN"},
}};

// Codes accepted as bare three-letter markers. Restricting to real codes
// keeps words like "SET 2" from parsing as prices.
const std::set<std::u32string>& iso_codes() {
  static const std::set<std::u32string> codes{
      U"EUR", U"USD", U"GBP", U"PLN", U"CHF", U"JPY", U"CNY", U"SEK", U"NOK", U"DKK",
      U"CZK", U"HUF", U"RON", U"BGN", U"TRY", U"CAD", U"AUD", U"NZD", U"INR", U"HKD",
      U"SGD", U"KRW", U"MXN", U"BRL", U"ZAR", U"ILS", U"AED", U"UAH", U"ISK", U"THB"};
  return codes;
}

bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

bool boundary_before(const std::u32string& s, std::size_t pos) {
  return pos == 0 || unicode::is_space(s[pos - 1]);
}

// Marker ending exactly at `end`; returns its start and currency code.
std::optional<std::pair<std::size_t, std::string>> marker_ending_at(const std::u32string& s,
                                                                    std::size_t end) {
  for (const auto& m : kSymbolMarkers) {
    if (end >= m.text.size() && std::u32string_view(s).substr(end - m.text.size(), m.text.size()) == m.text) {
      return std::make_pair(end - m.text.size(), std::string(m.code));
    }
  }
  if (end >= 3) {
    const std::u32string code = s.substr(end - 3, 3);
    if (iso_codes().contains(code)) {
      return std::make_pair(end - 3, unicode::from_code_points(code));
    }
  }
  return std::nullopt;
}

std::size_t skip_space_back(const std::u32string& s, std::size_t pos) {
  while (pos > 0 && unicode::is_space(s[pos - 1])) --pos;
  return pos;
}

bool is_leader(char32_t c) {
  return c == U'.' || c == U'…' || c == U'-' || c == U'_' || c == U'·' || c == U'–' ||
         c == U'—' || c == U':' || unicode::is_space(c);
}

std::string strip_price(const std::string& text, const Price& price) {
  std::u32string cps = unicode::to_code_points(unicode::trim(text));
  const std::u32string raw = unicode::to_code_points(price.raw);
  if (cps.size() >= raw.size() && cps.compare(cps.size() - raw.size(), raw.size(), raw) == 0) {
    cps.resize(cps.size() - raw.size());
  }
  while (!cps.empty() && is_leader(cps.back())) cps.pop_back();
  return unicode::trim(unicode::from_code_points(cps));
}

std::vector<std::string> make_tags(const MenuItem& item) {
  std::string text = item.name;
  if (item.description) text += " " + *item.description;
  std::vector<std::string> tags = tokenize(text);
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  return tags;
}

}  // namespace

std::string item_id(std::size_t section, std::size_t item) {
  return std::to_string(section) + "." + std::to_string(item);
}

std::size_t DigitalMenu::item_count() const {
  std::size_t n = 0;
  for (const auto& s : sections) n += s.items.size();
  return n;
}

std::vector<std::string> DigitalMenu::item_ids() const {
  std::vector<std::string> ids;
  for (std::size_t s = 0; s < sections.size(); ++s) {
    for (std::size_t i = 0; i < sections[s].items.size(); ++i) ids.push_back(item_id(s, i));
  }
  return ids;
}

const MenuItem* DigitalMenu::find_item(std::string_view id) const {
  const auto dot = id.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == id.size()) return nullptr;
  std::size_t s = 0;
  std::size_t i = 0;
  try {
    std::size_t used = 0;
    s = std::stoul(std::string(id.substr(0, dot)), &used);
    if (used != dot) return nullptr;
    i = std::stoul(std::string(id.substr(dot + 1)), &used);
    if (used != id.size() - dot - 1) return nullptr;
  } catch (const std::exception&) {
    return nullptr;
  }
  if (item_id(s, i) != id) return nullptr;  // rejects "01.1", "+0.1"
  if (s >= sections.size() || i >= sections[s].items.size()) return nullptr;
  return &sections[s].items[i];
}

std::optional<Price> parse_price(std::string_view text) {
  const std::u32string s = unicode::to_code_points(text);
  std::size_t end = skip_space_back(s, s.size());
  if (end == 0) return std::nullopt;
  const std::size_t match_end = end;

  std::optional<std::string> currency;
  if (!is_digit(s[end - 1])) {
    auto suffix = marker_ending_at(s, end);
    if (!suffix) return std::nullopt;
    currency = suffix->second;
    end = skip_space_back(s, suffix->first);
    if (end == 0 || !is_digit(s[end - 1])) return std::nullopt;
  }

  // Amount: digits, optionally followed by a separator and exactly two digits.
  std::size_t num_end = end;
  long long fraction = 0;
  if (num_end >= 4 && is_digit(s[num_end - 1]) && is_digit(s[num_end - 2]) &&
      (s[num_end - 3] == U'.' || s[num_end - 3] == U',') && is_digit(s[num_end - 4])) {
    fraction = (s[num_end - 2] - U'0') * 10 + (s[num_end - 1] - U'0');
    num_end -= 3;
  }
  std::size_t num_start = num_end;
  while (num_start > 0 && is_digit(s[num_start - 1])) --num_start;
  if (num_start == num_end || num_end - num_start > 12) return std::nullopt;
  long long whole = 0;
  for (std::size_t i = num_start; i < num_end; ++i) whole = whole * 10 + (s[i] - U'0');

  std::size_t match_start = num_start;
  if (!boundary_before(s, num_start)) {
    auto prefix = marker_ending_at(s, num_start);
    if (!prefix || !boundary_before(s, prefix->first)) return std::nullopt;
    match_start = prefix->first;
    currency = prefix->second;
  } else if (num_start > 0) {
    // A marker separated from the amount by whitespace also counts.
    const std::size_t before = skip_space_back(s, num_start);
    if (auto prefix = marker_ending_at(s, before);
        prefix && boundary_before(s, prefix->first)) {
      match_start = prefix->first;
      currency = prefix->second;
    }
  }

  Price price;
  price.amount_minor = whole * 100 + fraction;
  price.currency = currency.value_or("UNKNOWN");
  price.raw = unicode::from_code_points(std::u32string_view(s).substr(match_start, match_end - match_start));
  return price;
}

std::string format_price(const Price& price) {
  const long long whole = price.amount_minor / 100;
  const long long cents = price.amount_minor % 100;
  std::string out = std::to_string(whole) + "." + (cents < 10 ? "0" : "") + std::to_string(cents);
  if (price.currency != "UNKNOWN") out += " " + price.currency;
  return out;
}

std::string_view line_class_name(LineClass c) {
  switch (c) {
    case LineClass::kSectionHeader: return "section_header";
    case LineClass::kItem: return "item";
    case LineClass::kDescription: return "description";
    case LineClass::kNoise: return "noise";
  }
  return "unknown";
}

LineClass classify_line(const TextLine& line, std::optional<LineClass> prev,
                        const MenuParseOptions& options) {
  if (line.mean_confidence < options.noise_confidence) return LineClass::kNoise;
  const std::string text = line.text();
  if (parse_price(text)) return LineClass::kItem;

  const std::u32string cps = unicode::to_code_points(text);
  std::size_t non_space = 0;
  std::size_t letters = 0;
  bool all_upper = true;
  std::optional<char32_t> first_letter;
  for (char32_t c : cps) {
    if (unicode::is_space(c)) continue;
    ++non_space;
    if (unicode::is_letter(c)) {
      ++letters;
      if (!first_letter) first_letter = c;
      if (!unicode::is_upper(c)) all_upper = false;
    }
  }
  if (letters > 0 && all_upper && cps.size() <= options.header_max_length &&
      static_cast<double>(letters) >= options.header_letter_ratio * static_cast<double>(non_space)) {
    return LineClass::kSectionHeader;
  }
  const bool continues_item =
      prev == LineClass::kItem || prev == LineClass::kDescription;
  const bool starts_lower = first_letter && unicode::is_lower(*first_letter);
  const bool starts_paren = !cps.empty() && cps.front() == U'(';
  if (continues_item && (starts_lower || starts_paren)) return LineClass::kDescription;
  return LineClass::kItem;
}

namespace {

// Shared fold used by classify_lines and build_menu.
struct MenuFold {
  std::vector<LineClass> classes;
  DigitalMenu menu;
};

MenuFold fold_lines(const ReadingOrderDocument& doc, const MenuParseOptions& options) {
  MenuFold fold;
  auto& sections = fold.menu.sections;
  std::optional<LineClass> prev;
  MenuItem* last_item = nullptr;

  auto current_section = [&]() -> MenuSection& {
    if (sections.empty()) sections.push_back({std::string(kImplicitSectionTitle), std::nullopt, {}});
    return sections.back();
  };

  for (std::size_t index = 0; index < doc.lines.size(); ++index) {
    const TextLine& line = doc.lines[index];
    const int line_no = static_cast<int>(index);
    LineClass cls = classify_line(line, prev, options);
    const std::string text = unicode::trim(line.text());

    switch (cls) {
      case LineClass::kNoise:
        break;
      case LineClass::kSectionHeader:
        sections.push_back({text, line_no, {}});
        last_item = nullptr;
        break;
      case LineClass::kDescription: {
        if (last_item == nullptr) {
          cls = LineClass::kNoise;
          break;
        }
        last_item->description =
            last_item->description ? *last_item->description + " " + text : text;
        last_item->source_lines.push_back(line_no);
        break;
      }
      case LineClass::kItem: {
        const auto price = parse_price(text);
        std::string name = price ? strip_price(text, *price) : text;
        if (name.empty()) {
          // A bare price belongs to the item above it.
          if (last_item == nullptr) {
            cls = LineClass::kNoise;
            break;
          }
          if (!last_item->price) last_item->price = price;
          last_item->source_lines.push_back(line_no);
          break;
        }
        MenuItem item;
        item.name = std::move(name);
        item.price = price;
        item.source_lines.push_back(line_no);
        auto& section = current_section();
        section.items.push_back(std::move(item));
        last_item = &section.items.back();
        break;
      }
    }
    fold.classes.push_back(cls);
    if (cls != LineClass::kNoise) prev = cls;
  }

  for (auto& section : sections) {
    for (auto& item : section.items) item.tags = make_tags(item);
  }
  return fold;
}

}  // namespace

std::vector<LineClass> classify_lines(const ReadingOrderDocument& doc,
                                      const MenuParseOptions& options) {
  return fold_lines(doc, options).classes;
}

std::optional<std::string> detect_language(const ReadingOrderDocument& doc) {
  std::size_t letters = 0;
  std::size_t greek = 0;
  for (const auto& line : doc.lines) {
    for (char32_t c : unicode::to_code_points(line.text())) {
      if (!unicode::is_letter(c)) continue;
      ++letters;
      if (unicode::is_greek(c)) ++greek;
    }
  }
  if (letters > 0 && greek * 2 >= letters) return "el";
  return std::nullopt;
}

DigitalMenu build_menu(const ReadingOrderDocument& doc, MenuProvenance provenance,
                       const MenuParseOptions& options) {
  MenuFold fold = fold_lines(doc, options);
  if (fold.menu.item_count() == 0) {
    throw Error(ErrorCode::kEmptyMenu, "no menu items found in " +
                                           std::to_string(doc.lines.size()) + " lines");
  }
  fold.menu.language_hint = detect_language(doc);
  provenance.method = MenuMethod::kGrammar;
  fold.menu.provenance = std::move(provenance);
  return std::move(fold.menu);
}

}  // namespace menulens
