#include "menulens/recommend.hpp"

#include <algorithm>
#include <tuple>

#include "menulens/error.hpp"
#include "menulens/text.hpp"
#include "menulens/unicode.hpp"

namespace menulens {
namespace {

std::vector<std::string> intersect(const std::vector<std::string>& tags,
                                   const std::set<std::string>& terms) {
  std::vector<std::string> out;
  for (const auto& t : tags) {
    if (terms.contains(t)) out.push_back(t);
  }
  return out;
}

bool excluded(const MenuItem& item, const ConstraintSet& constraints) {
  return std::any_of(item.tags.begin(), item.tags.end(),
                     [&](const std::string& t) { return constraints.hard_exclusions.contains(t); });
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

const MenuItem& item_at(const DigitalMenu& menu, const std::string& id) {
  const MenuItem* item = menu.find_item(id);
  if (item == nullptr) throw Error(ErrorCode::kInvalidArgument, "unknown item id '" + id + "'");
  return *item;
}

const DigitalMenu& require_menu(const ChatSession& session) {
  if (!session.menu) throw Error(ErrorCode::kInvalidArgument, "session has no menu");
  return *session.menu;
}

std::string render_text(const DigitalMenu& menu, const ConstraintSet& constraints,
                        const std::vector<RankedItem>& ranked) {
  std::string out = "Here is what I recommend from the menu:\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const MenuItem& item = item_at(menu, ranked[i].item_id);
    out += std::to_string(i + 1) + ". " + item.name;
    if (item.price) out += ", " + format_price(*item.price);
    out += ".";
    if (!ranked[i].rationale.empty()) out += " Matches what you like: " + join(ranked[i].rationale, ", ") + ".";
    out += "\n";
  }
  std::vector<std::string> left_out;
  for (const auto& section : menu.sections) {
    for (const auto& item : section.items) {
      if (excluded(item, constraints)) left_out.push_back(item.name);
    }
  }
  if (!left_out.empty()) {
    out += "Left out because of your dietary restrictions: " + join(left_out, ", ") + ".\n";
  }
  return out;
}

}  // namespace

void ChatSession::load_preferences(std::span<const PreferenceDoc> docs,
                                   const AllergenLexicon& lexicon) {
  preferences = std::make_shared<const PreferenceIndex>(PreferenceIndex::build(docs));
  constraints = extract_constraints(docs, lexicon).constraints;
}

std::optional<std::string> ChatSession::last_user_query() const {
  for (auto it = history.rbegin(); it != history.rend(); ++it) {
    if (it->role == "user") return it->text;
  }
  return std::nullopt;
}

std::vector<std::string> filter_items(const DigitalMenu& menu, const ConstraintSet& constraints) {
  std::vector<std::string> ids;
  for (std::size_t s = 0; s < menu.sections.size(); ++s) {
    for (std::size_t i = 0; i < menu.sections[s].items.size(); ++i) {
      if (!excluded(menu.sections[s].items[i], constraints)) ids.push_back(item_id(s, i));
    }
  }
  return ids;
}

int score_item(const MenuItem& item, const ConstraintSet& constraints) {
  return static_cast<int>(intersect(item.tags, constraints.soft_likes).size()) -
         static_cast<int>(intersect(item.tags, constraints.soft_dislikes).size());
}

std::vector<RankedItem> rank_items(const ChatSession& session) {
  const DigitalMenu& menu = require_menu(session);
  struct Candidate {
    RankedItem ranked;
    const MenuItem* item;
  };
  std::vector<Candidate> candidates;
  for (const auto& id : filter_items(menu, session.constraints)) {
    if (session.rejected_items.contains(id)) continue;
    const MenuItem& item = item_at(menu, id);
    candidates.push_back(
        {{id, score_item(item, session.constraints), intersect(item.tags, session.constraints.soft_likes)},
         &item});
  }
  if (candidates.empty()) {
    throw Error(ErrorCode::kNoEligibleItems, "no menu item is left after exclusions and rejections");
  }
  auto key = [](const Candidate& c) {
    const bool unpriced = !c.item->price.has_value();
    const long long price = c.item->price ? c.item->price->amount_minor : 0;
    return std::make_tuple(-c.ranked.score, unpriced, price, std::cref(c.item->name),
                           std::cref(c.ranked.item_id));
  };
  std::sort(candidates.begin(), candidates.end(),
            [&](const Candidate& a, const Candidate& b) { return key(a) < key(b); });
  std::vector<RankedItem> out;
  out.reserve(candidates.size());
  for (auto& c : candidates) out.push_back(std::move(c.ranked));
  return out;
}

Recommendation fallback_recommend(const ChatSession& session, std::string_view /*query*/,
                                  std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  Recommendation rec;
  rec.ranked = rank_items(session);
  if (rec.ranked.size() > k) rec.ranked.resize(k);
  rec.text = render_text(*session.menu, session.constraints, rec.ranked);
  rec.degraded = true;
  return rec;
}

std::string assemble_prompt(const ChatSession& session,
                            std::span<const PreferenceDoc* const> retrieved_docs,
                            std::string_view query, const RecommendOptions& options) {
  const DigitalMenu& menu = require_menu(session);

  std::vector<const PreferenceDoc*> prefs(retrieved_docs.begin(), retrieved_docs.end());
  std::vector<ChatTurn> history;
  const std::size_t first = session.history.size() > options.history_window
                                ? session.history.size() - options.history_window
                                : 0;
  history.assign(session.history.begin() + static_cast<std::ptrdiff_t>(first), session.history.end());

  auto render = [&] {
    std::string out;
    out += "=== SYSTEM ===\n";
    out += kAssistantSystemPrompt;
    out += "\n=== MENU ===\n";
    out += menu_to_json(menu).dump();
    out += "\n=== PREFERENCES ===\n";
    for (const auto* doc : prefs) out += "- [" + doc->id + "] " + doc->text + "\n";
    out += "=== CONSTRAINTS ===\n";
    for (const auto& term : session.constraints.hard_exclusions) out += "- exclude: " + term + "\n";
    for (const auto& term : session.constraints.soft_likes) out += "- likes: " + term + "\n";
    for (const auto& term : session.constraints.soft_dislikes) out += "- dislikes: " + term + "\n";
    out += "=== HISTORY ===\n";
    for (const auto& turn : history) out += turn.role + ": " + turn.text + "\n";
    out += "=== QUERY ===\n";
    out += query;
    out += "\n";
    return out;
  };

  std::string prompt = render();
  while (unicode::length(prompt) > options.prompt_char_budget && !prefs.empty()) {
    // Oldest first; undated documents count as oldest, later retrieval rank
    // breaks ties.
    std::size_t victim = 0;
    for (std::size_t i = 1; i < prefs.size(); ++i) {
      const auto& a = prefs[i]->timestamp;
      const auto& b = prefs[victim]->timestamp;
      const bool older = (!a && b) || (a && b && *a < *b);
      const bool same = a == b;
      if (older || same) victim = i;
    }
    prefs.erase(prefs.begin() + static_cast<std::ptrdiff_t>(victim));
    prompt = render();
  }
  while (unicode::length(prompt) > options.prompt_char_budget && !history.empty()) {
    history.erase(history.begin());
    prompt = render();
  }
  return prompt;
}

Recommendation chat(ChatSession& session, std::string_view query, std::size_t k,
                    ChatClient* client, const RecommendOptions& options) {
  const DigitalMenu& menu = require_menu(session);

  std::string retrieval_text(query);
  for (const auto& section : menu.sections) retrieval_text += " " + section.title;
  std::vector<const PreferenceDoc*> retrieved;
  std::vector<std::string> evidence;
  if (session.preferences) {
    for (const auto& hit : retrieve_topk(*session.preferences, retrieval_text, options.k_docs)) {
      retrieved.push_back(session.preferences->doc(hit.doc_id));
      evidence.push_back(hit.doc_id);
    }
  }

  Recommendation rec = fallback_recommend(session, query, k);
  rec.evidence = std::move(evidence);
  if (client != nullptr) {
    const std::string prompt = assemble_prompt(session, retrieved, query, options);
    try {
      rec.text = client->complete({{"system", kAssistantSystemPrompt}, {"user", prompt}});
      rec.degraded = false;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kLlmUnavailable) throw;
    }
  }
  session.last_k = k;
  session.history.push_back({"user", std::string(query)});
  session.history.push_back({"assistant", rec.text});
  return rec;
}

Recommendation regenerate(ChatSession& session, std::span<const std::string> rejected_ids,
                          ChatClient* client, const RecommendOptions& options) {
  const DigitalMenu& menu = require_menu(session);
  for (const auto& id : rejected_ids) {
    if (menu.find_item(id) == nullptr) {
      throw Error(ErrorCode::kInvalidArgument, "unknown item id '" + id + "'");
    }
  }
  session.rejected_items.insert(rejected_ids.begin(), rejected_ids.end());
  const std::string query = session.last_user_query().value_or(std::string(kCanonicalQuery));
  return chat(session, query, session.last_k, client, options);
}

nlohmann::ordered_json to_json(const Recommendation& rec, const DigitalMenu& menu) {
  nlohmann::ordered_json j;
  auto& ranked = j["ranked"] = nlohmann::ordered_json::array();
  for (const auto& r : rec.ranked) {
    const MenuItem& item = item_at(menu, r.item_id);
    nlohmann::ordered_json rj;
    rj["item_id"] = r.item_id;
    rj["name"] = item.name;
    if (item.price) {
      nlohmann::ordered_json pj;
      pj["amount_minor"] = item.price->amount_minor;
      pj["currency"] = item.price->currency;
      pj["raw"] = item.price->raw;
      rj["price"] = pj;
    } else {
      rj["price"] = nullptr;
    }
    rj["score"] = r.score;
    rj["rationale"] = r.rationale;
    ranked.push_back(std::move(rj));
  }
  j["evidence"] = rec.evidence;
  j["text"] = rec.text;
  j["degraded"] = rec.degraded;
  return j;
}

}  // namespace menulens
