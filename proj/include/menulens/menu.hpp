#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "menulens/layout.hpp"
#include "menulens/llm_client.hpp"

namespace menulens {

struct Price {
  long long amount_minor = 0;
  std::string currency = "UNKNOWN";  // ISO-4217 code or UNKNOWN
  std::string raw;                   // matched substring, verbatim
  friend bool operator==(const Price&, const Price&) = default;
};

struct MenuItem {
  std::string name;
  std::optional<std::string> description;
  std::optional<Price> price;
  std::vector<int> source_lines;
  std::vector<std::string> tags;  // sorted, unique
  friend bool operator==(const MenuItem&, const MenuItem&) = default;
};

struct MenuSection {
  std::string title;
  std::optional<int> source_line;  // absent for the implicit GENERAL section
  std::vector<MenuItem> items;
  friend bool operator==(const MenuSection&, const MenuSection&) = default;
};

enum class MenuMethod { kGrammar, kLlm };

struct MenuProvenance {
  std::optional<int> keyframe_index;
  std::string image_ref;
  MenuMethod method = MenuMethod::kGrammar;
  /// Set when the LLM path was requested but the grammar produced the menu.
  bool degraded = false;
  friend bool operator==(const MenuProvenance&, const MenuProvenance&) = default;
};

struct DigitalMenu {
  std::vector<MenuSection> sections;
  std::optional<std::string> language_hint;
  MenuProvenance provenance;

  std::size_t item_count() const;
  /// "<section>.<item>" identifiers in menu order.
  std::vector<std::string> item_ids() const;
  const MenuItem* find_item(std::string_view id) const;
  friend bool operator==(const DigitalMenu&, const DigitalMenu&) = default;
};

inline constexpr int kMenuSchemaVersion = 1;
inline constexpr std::string_view kImplicitSectionTitle = "GENERAL";

std::string item_id(std::size_t section, std::size_t item);

/// Price at the end of `text`: optional leading marker (€ $ £ zł zl or a
/// three-letter code), an amount with '.' or ',' and exactly zero or two
/// decimals, optional trailing marker. The match must start at a word
/// boundary.
std::optional<Price> parse_price(std::string_view text);

/// "8.50 EUR", or "8.50" when the currency is unknown.
std::string format_price(const Price& price);

enum class LineClass { kSectionHeader, kItem, kDescription, kNoise };

std::string_view line_class_name(LineClass c);

struct MenuParseOptions {
  double noise_confidence = 0.3;
  double header_letter_ratio = 0.7;
  std::size_t header_max_length = 40;
};

/// Rules in order: low confidence -> Noise; trailing price -> Item; short
/// all-caps text -> SectionHeader; lowercase or '(' continuation of an
/// item -> Description; anything else -> Item.
LineClass classify_line(const TextLine& line, std::optional<LineClass> prev,
                        const MenuParseOptions& options = {});

/// Classes that build_menu actually applies, one per line. Differs from
/// repeated classify_line calls only where a line had to be demoted to
/// Noise (a bare price with no item to attach to).
std::vector<LineClass> classify_lines(const ReadingOrderDocument& doc,
                                      const MenuParseOptions& options = {});

/// Deterministic grammar fold over the reading-order lines. Throws
/// kEmptyMenu when no item is found.
DigitalMenu build_menu(const ReadingOrderDocument& doc, MenuProvenance provenance,
                       const MenuParseOptions& options = {});

/// "el" when Greek letters make up at least half of all letters.
std::optional<std::string> detect_language(const ReadingOrderDocument& doc);

/// Canonical JSON (stable key order, schema_version 1).
nlohmann::ordered_json menu_to_json(const DigitalMenu& menu);
std::string menu_to_json_string(const DigitalMenu& menu);
DigitalMenu menu_from_json(const nlohmann::json& j);
DigitalMenu parse_menu_json(std::string_view bytes);
std::string menu_to_markdown(const DigitalMenu& menu);

/// Instruction sent with the raw menu text on the LLM path.
extern const char* const kMenuStructurePrompt;

/// Structures the menu with a language model: one request, one correction
/// retry on an invalid reply, then the grammar fallback (flagged degraded).
/// An unreachable or refusing client also falls back. Throws kEmptyMenu when
/// both paths come up empty. `client` may be null (offline).
DigitalMenu llm_structure_menu(const ReadingOrderDocument& doc, ChatClient* client,
                               MenuProvenance provenance,
                               const MenuParseOptions& options = {});

/// Validates and converts an LLM reply into menu sections; throws
/// kSchemaError/kParseError describing the first problem.
std::vector<MenuSection> sections_from_llm_reply(std::string_view reply,
                                                 const ReadingOrderDocument& doc);

}  // namespace menulens
