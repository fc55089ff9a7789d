#include <algorithm>

#include "json_util.hpp"
#include "menulens/error.hpp"
#include "menulens/menu.hpp"
#include "menulens/unicode.hpp"

namespace menulens {
namespace {

nlohmann::ordered_json price_to_json(const Price& p) {
  nlohmann::ordered_json j;
  j["amount_minor"] = p.amount_minor;
  j["currency"] = p.currency;
  j["raw"] = p.raw;
  return j;
}

Price price_from_json(const nlohmann::json& j) {
  Price p;
  p.amount_minor = detail::require_integer(j, "amount_minor");
  if (p.amount_minor < 0) throw Error::schema("amount_minor", "must be >= 0");
  p.currency = detail::require_string(j, "currency");
  p.raw = detail::require_string(j, "raw");
  return p;
}

std::string_view method_name(MenuMethod m) { return m == MenuMethod::kLlm ? "llm" : "grammar"; }

}  // namespace

nlohmann::ordered_json menu_to_json(const DigitalMenu& menu) {
  nlohmann::ordered_json j;
  j["schema_version"] = kMenuSchemaVersion;
  j["language_hint"] = menu.language_hint ? nlohmann::ordered_json(*menu.language_hint)
                                          : nlohmann::ordered_json(nullptr);
  auto& prov = j["provenance"];
  prov["keyframe_index"] = menu.provenance.keyframe_index
                               ? nlohmann::ordered_json(*menu.provenance.keyframe_index)
                               : nlohmann::ordered_json(nullptr);
  prov["image_ref"] = menu.provenance.image_ref;
  prov["method"] = method_name(menu.provenance.method);
  prov["degraded"] = menu.provenance.degraded;
  auto& sections = j["sections"] = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < menu.sections.size(); ++s) {
    const auto& section = menu.sections[s];
    nlohmann::ordered_json sj;
    sj["title"] = section.title;
    sj["source_line"] = section.source_line ? nlohmann::ordered_json(*section.source_line)
                                            : nlohmann::ordered_json(nullptr);
    auto& items = sj["items"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < section.items.size(); ++i) {
      const auto& item = section.items[i];
      nlohmann::ordered_json ij;
      ij["id"] = item_id(s, i);
      ij["name"] = item.name;
      ij["description"] = item.description ? nlohmann::ordered_json(*item.description)
                                           : nlohmann::ordered_json(nullptr);
      ij["price"] = item.price ? price_to_json(*item.price) : nlohmann::ordered_json(nullptr);
      ij["source_lines"] = item.source_lines;
      ij["tags"] = item.tags;
      items.push_back(std::move(ij));
    }
    sections.push_back(std::move(sj));
  }
  return j;
}

std::string menu_to_json_string(const DigitalMenu& menu) { return menu_to_json(menu).dump(2); }

DigitalMenu menu_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error::schema("$", "expected an object");
  if (detail::require_integer(j, "schema_version") != kMenuSchemaVersion) {
    throw Error::schema("schema_version", "unsupported version");
  }
  DigitalMenu menu;
  if (const auto& lang = detail::require(j, "language_hint"); !lang.is_null()) {
    if (!lang.is_string()) throw Error::schema("language_hint", "expected a string or null");
    menu.language_hint = lang.get<std::string>();
  }
  const auto& prov = detail::require(j, "provenance");
  if (const auto& kf = detail::require(prov, "keyframe_index"); !kf.is_null()) {
    menu.provenance.keyframe_index = static_cast<int>(detail::require_integer(prov, "keyframe_index"));
  }
  menu.provenance.image_ref = detail::require_string(prov, "image_ref");
  const std::string method = detail::require_string(prov, "method");
  if (method != "grammar" && method != "llm") throw Error::schema("method", "unknown method");
  menu.provenance.method = method == "llm" ? MenuMethod::kLlm : MenuMethod::kGrammar;
  const auto& degraded = detail::require(prov, "degraded");
  if (!degraded.is_boolean()) throw Error::schema("degraded", "expected a boolean");
  menu.provenance.degraded = degraded.get<bool>();

  for (const auto& sj : detail::require_array(j, "sections")) {
    MenuSection section;
    section.title = detail::require_string(sj, "title");
    if (const auto& line = detail::require(sj, "source_line"); !line.is_null()) {
      section.source_line = static_cast<int>(detail::require_integer(sj, "source_line"));
    }
    for (const auto& ij : detail::require_array(sj, "items")) {
      MenuItem item;
      item.name = detail::require_string(ij, "name");
      if (unicode::trim(item.name).empty()) throw Error::schema("name", "empty");
      if (const auto& d = detail::require(ij, "description"); !d.is_null()) {
        item.description = detail::require_string(ij, "description");
      }
      if (const auto& p = detail::require(ij, "price"); !p.is_null()) item.price = price_from_json(p);
      for (const auto& line : detail::require_array(ij, "source_lines")) {
        if (!line.is_number_integer()) throw Error::schema("source_lines", "expected integers");
        item.source_lines.push_back(line.get<int>());
      }
      if (item.source_lines.empty()) throw Error::schema("source_lines", "empty");
      if (!std::is_sorted(item.source_lines.begin(), item.source_lines.end())) {
        throw Error::schema("source_lines", "not ascending");
      }
      for (const auto& tag : detail::require_array(ij, "tags")) {
        if (!tag.is_string()) throw Error::schema("tags", "expected strings");
        item.tags.push_back(tag.get<std::string>());
      }
      section.items.push_back(std::move(item));
    }
    menu.sections.push_back(std::move(section));
  }
  return menu;
}

DigitalMenu parse_menu_json(std::string_view bytes) {
  return menu_from_json(detail::parse_json(bytes));
}

std::string menu_to_markdown(const DigitalMenu& menu) {
  std::string out;
  for (const auto& section : menu.sections) {
    if (!out.empty()) out += "\n";
    out += "## " + section.title + "\n";
    for (const auto& item : section.items) {
      out += "- " + item.name;
      if (item.price) out += " — " + format_price(*item.price);
      out += "\n";
      if (item.description) out += "  " + *item.description + "\n";
    }
  }
  return out;
}

}  // namespace menulens
