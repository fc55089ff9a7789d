#pragma once

#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "menulens/llm_client.hpp"
#include "menulens/menu.hpp"
#include "menulens/prefs.hpp"

namespace menulens {

inline constexpr std::string_view kCanonicalQuery = "What do you recommend from the menu?";

struct ChatTurn {
  std::string role;  // "user" or "assistant"
  std::string text;
  friend bool operator==(const ChatTurn&, const ChatTurn&) = default;
};

/// Conversation state. One chat at a time per session; callers serialise.
struct ChatSession {
  std::string id;
  std::optional<DigitalMenu> menu;
  ConstraintSet constraints;
  std::shared_ptr<const PreferenceIndex> preferences;
  std::vector<ChatTurn> history;
  std::set<std::string> rejected_items;
  std::size_t last_k = 3;

  /// Builds the index and constraints from a profile's documents.
  void load_preferences(std::span<const PreferenceDoc> docs,
                        const AllergenLexicon& lexicon = AllergenLexicon::bundled());
  std::optional<std::string> last_user_query() const;
};

struct RankedItem {
  std::string item_id;
  int score = 0;
  std::vector<std::string> rationale;  // liked terms the item matched
  friend bool operator==(const RankedItem&, const RankedItem&) = default;
};

struct Recommendation {
  std::vector<RankedItem> ranked;
  std::vector<std::string> evidence;  // retrieved preference doc ids
  std::string text;
  bool degraded = false;
  friend bool operator==(const Recommendation&, const Recommendation&) = default;
};

struct RecommendOptions {
  std::size_t k_docs = 5;
  std::size_t history_window = 10;
  /// Prompt size cap in code points.
  std::size_t prompt_char_budget = 16000;
};

/// Items none of whose tags is a hard exclusion, in menu order.
std::vector<std::string> filter_items(const DigitalMenu& menu, const ConstraintSet& constraints);

/// |tags ∩ likes| - |tags ∩ dislikes|.
int score_item(const MenuItem& item, const ConstraintSet& constraints);

/// Eligible items (filtered, not rejected) ordered by score descending, then
/// price ascending with unpriced items last, then name, then id. Throws
/// kNoEligibleItems when nothing is left.
std::vector<RankedItem> rank_items(const ChatSession& session);

/// Template answer over the top k ranked items; degraded is always set.
Recommendation fallback_recommend(const ChatSession& session, std::string_view query,
                                  std::size_t k);

/// Fixed-order prompt: SYSTEM, MENU, PREFERENCES, CONSTRAINTS, HISTORY,
/// QUERY. Over budget, preference lines go first (oldest timestamp first,
/// undated counted as oldest), then the oldest history turns.
std::string assemble_prompt(const ChatSession& session,
                            std::span<const PreferenceDoc* const> retrieved_docs,
                            std::string_view query, const RecommendOptions& options = {});

/// Retrieve then generate. With a client the text comes from the model and
/// the ranked list from rank_items; offline (client == nullptr) or when the
/// model is unreachable the template text is used and degraded is set.
/// Appends the exchange to the session history.
Recommendation chat(ChatSession& session, std::string_view query, std::size_t k,
                    ChatClient* client, const RecommendOptions& options = {});

/// Adds ids to the rejected set and re-asks the last user query (the
/// canonical query when there is none). Unknown ids throw kInvalidArgument
/// and leave the session unchanged.
Recommendation regenerate(ChatSession& session, std::span<const std::string> rejected_ids,
                          ChatClient* client, const RecommendOptions& options = {});

nlohmann::ordered_json to_json(const Recommendation& rec, const DigitalMenu& menu);

}  // namespace menulens
