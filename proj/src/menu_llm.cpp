#include <algorithm>

#include "json_util.hpp"
#include "menulens/error.hpp"
#include "menulens/menu.hpp"
#include "menulens/text.hpp"
#include "menulens/unicode.hpp"

namespace menulens {

const char* const kMenuStructurePrompt =
    "Convert the OCR text of a restaurant menu card into JSON. Keep dish names in the "
    "original language and spelling, fixing only obvious OCR errors. Reply with a single "
    "JSON object and nothing else, using exactly this shape:\n"
    "{\"sections\": [{\"title\": string, \"items\": [{\"name\": string, "
    "\"description\": string or null, \"price\": string or null}]}]}\n"
    "Copy each price exactly as printed, including its currency symbol. Put items that "
    "appear before any section heading in a section titled \"GENERAL\".";

namespace {

// Models often wrap JSON in prose or code fences; keep the outermost object.
std::string_view json_body(std::string_view reply) {
  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    return reply;
  }
  return reply.substr(open, close - open + 1);
}

// Line whose text best matches `name`; lines are attributed by similarity
// because the model does not report where it read an item.
int best_source_line(const std::string& name, const ReadingOrderDocument& doc) {
  int best = 0;
  double best_score = -1;
  for (std::size_t i = 0; i < doc.lines.size(); ++i) {
    const std::string text = doc.lines[i].text();
    const auto price = parse_price(text);
    std::string candidate = text;
    if (price) candidate = unicode::trim(text.substr(0, text.size() - price->raw.size()));
    const double score = name_similarity(name, candidate);
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

std::vector<MenuSection> sections_from_llm_reply(std::string_view reply,
                                                 const ReadingOrderDocument& doc) {
  const nlohmann::json j = detail::parse_json(json_body(reply));
  std::vector<MenuSection> sections;
  for (const auto& sj : detail::require_array(j, "sections")) {
    MenuSection section;
    section.title = unicode::nfc(detail::require_string(sj, "title"));
    for (const auto& ij : detail::require_array(sj, "items")) {
      MenuItem item;
      item.name = unicode::trim(unicode::nfc(detail::require_string(ij, "name")));
      if (item.name.empty()) throw Error::schema("name", "empty");
      if (auto d = ij.find("description"); d != ij.end() && !d->is_null()) {
        if (!d->is_string()) throw Error::schema("description", "expected a string or null");
        item.description = unicode::nfc(d->get<std::string>());
      }
      if (auto p = ij.find("price"); p != ij.end() && !p->is_null()) {
        if (!p->is_string()) throw Error::schema("price", "expected a string or null");
        item.price = parse_price(p->get<std::string>());
      }
      item.source_lines.push_back(best_source_line(item.name, doc));
      std::string text = item.name;
      if (item.description) text += " " + *item.description;
      item.tags = tokenize(text);
      std::sort(item.tags.begin(), item.tags.end());
      item.tags.erase(std::unique(item.tags.begin(), item.tags.end()), item.tags.end());
      section.items.push_back(std::move(item));
    }
    sections.push_back(std::move(section));
  }
  return sections;
}

DigitalMenu llm_structure_menu(const ReadingOrderDocument& doc, ChatClient* client,
                               MenuProvenance provenance, const MenuParseOptions& options) {
  auto fallback = [&] {
    DigitalMenu menu = build_menu(doc, provenance, options);
    menu.provenance.degraded = client != nullptr;
    return menu;
  };
  if (client == nullptr) return fallback();

  const std::string raw_text = lines_to_text(doc);
  std::vector<ChatMessage> messages{{"system", kMenuStructurePrompt}, {"user", raw_text}};
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string reply;
    try {
      reply = client->complete(messages);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kLlmUnavailable || e.code() == ErrorCode::kLlmRejected) {
        return fallback();
      }
      throw;
    }
    try {
      DigitalMenu menu;
      menu.sections = sections_from_llm_reply(reply, doc);
      if (menu.item_count() == 0) throw Error::schema("items", "no items in reply");
      menu.language_hint = detect_language(doc);
      menu.provenance = provenance;
      menu.provenance.method = MenuMethod::kLlm;
      menu.provenance.degraded = false;
      return menu;
    } catch (const Error& e) {
      messages.push_back({"assistant", reply});
      messages.push_back({"user", std::string("That reply was not valid: ") + e.what() +
                                      ". Reply again with only the JSON object."});
    }
  }
  return fallback();
}

}  // namespace menulens
