#include <gtest/gtest.h>

#include <deque>
#include <random>

#include "menulens/error.hpp"
#include "menulens/recommend.hpp"
#include "menulens/unicode.hpp"
#include "support/oracles.hpp"
#include "support/test_support.hpp"

namespace menulens {
namespace {

using Terms = std::vector<std::string>;

MenuItem item(std::string name, std::optional<long long> minor, Terms tags) {
  MenuItem it;
  it.name = std::move(name);
  if (minor) it.price = Price{*minor, "EUR", ""};
  std::sort(tags.begin(), tags.end());
  it.tags = std::move(tags);
  it.source_lines = {0};
  return it;
}

DigitalMenu menu_of(std::vector<std::vector<MenuItem>> sections) {
  DigitalMenu m;
  for (std::size_t s = 0; s < sections.size(); ++s) {
    m.sections.push_back({"S" + std::to_string(s), static_cast<int>(s), std::move(sections[s])});
  }
  return m;
}

ConstraintSet constraints(Terms hard, Terms likes, Terms dislikes) {
  return {{hard.begin(), hard.end()}, {likes.begin(), likes.end()}, {dislikes.begin(), dislikes.end()}};
}

ChatSession session_with(DigitalMenu menu, ConstraintSet c = {}) {
  ChatSession s;
  s.id = "t";
  s.menu = std::move(menu);
  s.constraints = std::move(c);
  return s;
}

std::vector<std::string> ids_of(const std::vector<RankedItem>& ranked) {
  std::vector<std::string> out;
  for (const auto& r : ranked) out.push_back(r.item_id);
  return out;
}

class ScriptedClient : public ChatClient {
 public:
  explicit ScriptedClient(std::deque<std::string> replies, ErrorCode failure = ErrorCode::kLlmUnavailable)
      : replies_(std::move(replies)), failure_(failure) {}
  std::string complete(const std::vector<ChatMessage>& messages) override {
    seen.push_back(messages);
    if (replies_.empty()) throw Error(failure_, "down");
    std::string r = replies_.front();
    replies_.pop_front();
    return r;
  }
  std::vector<std::vector<ChatMessage>> seen;

 private:
  std::deque<std::string> replies_;
  ErrorCode failure_;
};

// --- filter and score ------------------------------------------------------------

TEST(FilterItems, DropsAnyExcludedTag) {
  const auto m = menu_of({{item("Satay", 900, {"peanut", "chicken"}), item("Rice", 300, {"rice"})}});
  EXPECT_EQ(filter_items(m, constraints({"peanut"}, {}, {})), (Terms{"0.1"}));
  EXPECT_EQ(filter_items(m, {}), (Terms{"0.0", "0.1"}));
  EXPECT_TRUE(filter_items(m, constraints({"rice", "peanut"}, {}, {})).empty());
}

TEST(ScoreItem, LikesMinusDislikes) {
  const auto c = constraints({}, {"grilled", "octopus"}, {"chips"});
  EXPECT_EQ(score_item(item("Grilled Octopus", 1450, {"grilled", "octopus"}), c), 2);
  EXPECT_EQ(score_item(item("Fish and Chips", 1250, {"and", "chips", "fish"}), c), -1);
  EXPECT_EQ(score_item(item("Tea", 200, {"tea"}), c), 0);
}

// --- ranking --------------------------------------------------------------------

TEST(RankItems, ScoreThenPriceThenName) {
  const auto m = menu_of({{item("B", 500, {"x"}), item("A", 500, {"x"}), item("C", std::nullopt, {"x"}),
                           item("D", 100, {"y"}), item("E", 900, {"like"})}});
  const auto s = session_with(m, constraints({}, {"like"}, {"y"}));
  EXPECT_EQ(ids_of(rank_items(s)), (Terms{"0.4", "0.1", "0.0", "0.2", "0.3"}));
}

TEST(RankItems, UnpricedLastWithinScore) {
  const auto m = menu_of({{item("Free", std::nullopt, {"a"}), item("Paid", 2000, {"a"})}});
  EXPECT_EQ(ids_of(rank_items(session_with(m))), (Terms{"0.1", "0.0"}));
}

TEST(RankItems, NothingLeftIsNoEligibleItems) {
  auto s = session_with(menu_of({{item("Satay", 900, {"peanut"})}}), constraints({"peanut"}, {}, {}));
  try {
    rank_items(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoEligibleItems);
  }
}

TEST(RankItems, NoMenuIsInvalidArgument) {
  ChatSession s;
  EXPECT_THROW(rank_items(s), Error);
}

DigitalMenu random_menu(std::mt19937_64& rng) {
  static const Terms vocab{"peanut", "fish", "grilled", "octopus", "chips", "salad", "soup",
                           "vegan", "milk", "egg"};
  static const Terms names{"Soup", "Salad", "Fish", "Cake", "Tea", "Pasta"};
  std::vector<std::vector<MenuItem>> sections(1 + rng() % 3);
  for (auto& s : sections) {
    const std::size_t n = rng() % 5;
    for (std::size_t i = 0; i < n; ++i) {
      Terms tags;
      for (std::size_t t = 0; t < rng() % 4; ++t) tags.push_back(vocab[rng() % vocab.size()]);
      std::sort(tags.begin(), tags.end());
      tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
      std::optional<long long> price;
      if (rng() % 4 != 0) price = static_cast<long long>(100 * (rng() % 6));
      s.push_back(item(names[rng() % names.size()], price, tags));
    }
  }
  return menu_of(std::move(sections));
}

ConstraintSet random_constraints(std::mt19937_64& rng) {
  static const Terms vocab{"peanut", "fish", "grilled", "octopus", "chips", "salad", "soup",
                           "vegan", "milk", "egg"};
  ConstraintSet c;
  for (const auto& t : vocab) {
    switch (rng() % 6) {
      case 0: c.hard_exclusions.insert(t); break;
      case 1: c.soft_likes.insert(t); break;
      case 2: c.soft_dislikes.insert(t); break;
      default: break;
    }
  }
  return c;
}

TEST(RankItems, MatchesSelectionSortOracle) {
  std::mt19937_64 rng(2024);
  for (int run = 0; run < 500; ++run) {
    auto s = session_with(random_menu(rng), random_constraints(rng));
    const auto all = s.menu->item_ids();
    for (const auto& id : all) {
      if (rng() % 5 == 0) s.rejected_items.insert(id);
    }
    const auto want = oracle::rank(*s.menu, s.constraints, s.rejected_items);
    if (want.empty()) {
      EXPECT_THROW(rank_items(s), Error);
      continue;
    }
    const auto got = rank_items(s);
    ASSERT_EQ(got.size(), want.size()) << "run " << run;
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].item_id, want[i].id) << "run " << run;
      EXPECT_EQ(got[i].score, want[i].score);
      EXPECT_EQ(got[i].rationale, want[i].liked);
    }
  }
}

// --- fallback text ----------------------------------------------------------------

TEST(Fallback, GoldenTextAgainstOracle) {
  const auto m = menu_of({{item("Grilled Octopus", 1450, {"grilled", "octopus"}),
                           item("Peanut Noodles", 1100, {"noodles", "peanut"}),
                           item("Bread", std::nullopt, {"bread"})}});
  const auto c = constraints({"peanut"}, {"octopus"}, {});
  const auto s = session_with(m, c);
  const auto rec = fallback_recommend(s, kCanonicalQuery, 3);
  EXPECT_TRUE(rec.degraded);
  EXPECT_EQ(rec.text,
            "Here is what I recommend from the menu:\n"
            "1. Grilled Octopus, 14.50 EUR. Matches what you like: octopus.\n"
            "2. Bread.\n"
            "Left out because of your dietary restrictions: Peanut Noodles.\n");
  EXPECT_EQ(rec.text, oracle::fallback_text(m, c, oracle::rank(m, c, {})));
}

TEST(Fallback, TruncatesToK) {
  const auto m = menu_of({{item("A", 100, {}), item("B", 200, {}), item("C", 300, {})}});
  const auto rec = fallback_recommend(session_with(m), "q", 2);
  EXPECT_EQ(ids_of(rec.ranked), (Terms{"0.0", "0.1"}));
  EXPECT_THROW(fallback_recommend(session_with(m), "q", 0), Error);
}

TEST(Fallback, OracleAgreementOnRandomMenus) {
  std::mt19937_64 rng(55);
  for (int run = 0; run < 300; ++run) {
    const auto s = session_with(random_menu(rng), random_constraints(rng));
    auto want = oracle::rank(*s.menu, s.constraints, {});
    if (want.empty()) continue;
    const std::size_t k = 1 + rng() % 4;
    if (want.size() > k) want.resize(k);
    EXPECT_EQ(fallback_recommend(s, "q", k).text, oracle::fallback_text(*s.menu, s.constraints, want));
  }
}

// --- prompt ---------------------------------------------------------------------

TEST(AssemblePrompt, SectionOrderWithEmptyBlocks) {
  const auto s = session_with(menu_of({{item("Tea", 200, {"tea"})}}));
  const std::string p = assemble_prompt(s, {}, kCanonicalQuery);
  std::size_t last = 0;
  for (const char* h : {"=== SYSTEM ===", "=== MENU ===", "=== PREFERENCES ===", "=== CONSTRAINTS ===",
                        "=== HISTORY ===", "=== QUERY ==="}) {
    const auto at = p.find(h);
    ASSERT_NE(at, std::string::npos) << h;
    EXPECT_GE(at, last) << h;
    last = at;
  }
  EXPECT_NE(p.find("=== PREFERENCES ===\n=== CONSTRAINTS ===\n=== HISTORY ===\n=== QUERY ===\n"),
            std::string::npos);
  EXPECT_TRUE(p.ends_with(std::string("=== QUERY ===\n") + std::string(kCanonicalQuery) + "\n"));
}

TEST(AssemblePrompt, ListsPreferencesConstraintsAndHistory) {
  auto s = session_with(menu_of({{item("Tea", 200, {"tea"})}}), constraints({"peanut"}, {"tea"}, {"milk"}));
  s.history = {{"user", "hi"}, {"assistant", "hello"}};
  PreferenceDoc d{"m1", PrefSource::kManual, "loves tea", {}, std::nullopt};
  const PreferenceDoc* docs[] = {&d};
  const std::string p = assemble_prompt(s, docs, "more?");
  EXPECT_NE(p.find("- [m1] loves tea\n"), std::string::npos);
  EXPECT_NE(p.find("- exclude: peanut\n- likes: tea\n- dislikes: milk\n"), std::string::npos);
  EXPECT_NE(p.find("user: hi\nassistant: hello\n"), std::string::npos);
}

TEST(AssemblePrompt, BudgetDropsOldestPreferencesThenHistory) {
  auto s = session_with(menu_of({{item("Tea", 200, {"tea"})}}));
  s.history = {{"user", std::string(200, 'h')}, {"assistant", std::string(200, 'i')}};
  PreferenceDoc undated{"undated", PrefSource::kManual, std::string(300, 'u'), {}, std::nullopt};
  PreferenceDoc old{"old", PrefSource::kManual, std::string(300, 'o'), {}, parse_utc_instant("2020-01-01")};
  PreferenceDoc fresh{"fresh", PrefSource::kManual, std::string(300, 'f'), {}, parse_utc_instant("2024-01-01")};
  const PreferenceDoc* docs[] = {&fresh, &old, &undated};
  const std::size_t full = unicode::length(assemble_prompt(s, docs, "q"));

  RecommendOptions opts;
  opts.prompt_char_budget = full - 10;  // one preference line must go
  std::string p = assemble_prompt(s, docs, "q", opts);
  EXPECT_EQ(p.find("[undated]"), std::string::npos);
  EXPECT_NE(p.find("[old]"), std::string::npos);

  opts.prompt_char_budget = full - 400;
  p = assemble_prompt(s, docs, "q", opts);
  EXPECT_EQ(p.find("[old]"), std::string::npos);
  EXPECT_NE(p.find("[fresh]"), std::string::npos);

  opts.prompt_char_budget = full - 1000;  // every preference plus the oldest turn
  p = assemble_prompt(s, docs, "q", opts);
  EXPECT_EQ(p.find("[fresh]"), std::string::npos);
  EXPECT_EQ(p.find("hhhh"), std::string::npos);
  EXPECT_NE(p.find("iiii"), std::string::npos);
  EXPECT_LE(unicode::length(p), opts.prompt_char_budget);
}

TEST(AssemblePrompt, HistoryWindow) {
  auto s = session_with(menu_of({{item("Tea", 200, {"tea"})}}));
  for (int i = 0; i < 12; ++i) s.history.push_back({"user", "turn" + std::to_string(i) + "."});
  RecommendOptions opts;
  opts.history_window = 10;
  const std::string p = assemble_prompt(s, {}, "q", opts);
  EXPECT_EQ(p.find("turn1."), std::string::npos);
  EXPECT_NE(p.find("turn2."), std::string::npos);
  EXPECT_NE(p.find("turn11."), std::string::npos);
}

// --- chat and regenerate ------------------------------------------------------------

ChatSession fixture_session() {
  auto m = menu_of({{item("Grilled Octopus", 1450, {"grilled", "octopus"}),
                     item("Peanut Noodles", 1100, {"noodles", "peanut"}),
                     item("Fish and Chips", 1250, {"and", "chips", "fish"})},
                    {item("Lemonade", 300, {"lemonade"}), item("Espresso", 250, {"espresso"})}});
  auto s = session_with(std::move(m));
  const auto docs = load_preference_dir(testing::fixture("prefs/seafood_peanut")).docs;
  s.load_preferences(docs);
  return s;
}

TEST(Chat, OfflineUsesTemplateAndRecordsHistory) {
  auto s = fixture_session();
  const auto rec = chat(s, kCanonicalQuery, 3, nullptr);
  EXPECT_TRUE(rec.degraded);
  EXPECT_EQ(ids_of(rec.ranked), (Terms{"0.0", "1.1", "1.0"}));
  EXPECT_FALSE(rec.evidence.empty());
  ASSERT_EQ(s.history.size(), 2u);
  EXPECT_EQ(s.history[0], (ChatTurn{"user", std::string(kCanonicalQuery)}));
  EXPECT_EQ(s.history[1].text, rec.text);
  EXPECT_EQ(s.last_k, 3u);
}

TEST(Chat, ModelTextWithLibraryRanking) {
  auto s = fixture_session();
  ScriptedClient client({"Try the octopus."});
  const auto rec = chat(s, "something grilled?", 2, &client);
  EXPECT_FALSE(rec.degraded);
  EXPECT_EQ(rec.text, "Try the octopus.");
  EXPECT_EQ(ids_of(rec.ranked), (Terms{"0.0", "1.1"}));
  ASSERT_EQ(client.seen.size(), 1u);
  const std::string& prompt = client.seen[0][1].content;
  EXPECT_NE(prompt.find("something grilled?"), std::string::npos);
  EXPECT_NE(prompt.find("- exclude: peanut"), std::string::npos);
}

TEST(Chat, UnreachableModelDegrades) {
  auto s = fixture_session();
  ScriptedClient client({});
  const auto rec = chat(s, kCanonicalQuery, 3, &client);
  EXPECT_TRUE(rec.degraded);
  EXPECT_EQ(rec.text, fallback_recommend(fixture_session(), kCanonicalQuery, 3).text);
}

TEST(Chat, RefusingModelPropagates) {
  auto s = fixture_session();
  ScriptedClient client({}, ErrorCode::kLlmRejected);
  try {
    chat(s, kCanonicalQuery, 3, &client);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLlmRejected);
  }
}

TEST(Regenerate, ExcludesRejectedAndReusesLastQuery) {
  auto s = fixture_session();
  chat(s, "anything light?", 3, nullptr);
  const Terms reject{"0.0"};
  const auto rec = regenerate(s, reject, nullptr);
  EXPECT_EQ(ids_of(rec.ranked), (Terms{"1.1", "1.0", "0.2"}));
  EXPECT_EQ(s.history[2].text, "anything light?");
}

TEST(Regenerate, WithoutHistoryUsesCanonicalQuery) {
  auto s = fixture_session();
  const Terms reject{"1.0"};
  regenerate(s, reject, nullptr);
  EXPECT_EQ(s.history[0].text, kCanonicalQuery);
}

TEST(Regenerate, UnknownIdLeavesSessionUntouched) {
  auto s = fixture_session();
  const Terms reject{"0.0", "9.9"};
  try {
    regenerate(s, reject, nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
  EXPECT_TRUE(s.rejected_items.empty());
  EXPECT_TRUE(s.history.empty());
}

TEST(Regenerate, RejectingEverythingEndsInNoEligibleItems) {
  auto s = fixture_session();
  chat(s, kCanonicalQuery, 1, nullptr);
  std::size_t steps = 0;
  try {
    for (;;) {
      const auto rec = regenerate(s, Terms{s.history.empty() ? "0.0" : rank_items(s).front().item_id},
                                  nullptr);
      ++steps;
      ASSERT_LE(steps, s.menu->item_count());
      (void)rec;
    }
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoEligibleItems);
  }
  EXPECT_EQ(steps, 3u);  // four eligible items, the last rejection empties the list
}

TEST(Safety, NeverRecommendsExcludedOrRejected) {
  std::mt19937_64 rng(20240917);
  for (int run = 0; run < 1000; ++run) {
    auto s = session_with(random_menu(rng), random_constraints(rng));
    const auto ids = s.menu->item_ids();
    const std::size_t k = 1 + rng() % 3;
    std::size_t steps = 0;
    try {
      auto rec = chat(s, kCanonicalQuery, k, nullptr);
      for (;;) {
        for (const auto& r : rec.ranked) {
          const MenuItem* it = s.menu->find_item(r.item_id);
          ASSERT_NE(it, nullptr);
          for (const auto& t : it->tags) ASSERT_FALSE(s.constraints.hard_exclusions.contains(t));
          ASSERT_FALSE(s.rejected_items.contains(r.item_id));
        }
        ASSERT_LE(steps, ids.size());
        Terms reject{rec.ranked.front().item_id};
        if (rng() % 3 == 0) reject.push_back(ids[rng() % ids.size()]);
        rec = regenerate(s, reject, nullptr);
        ++steps;
      }
    } catch (const Error& e) {
      ASSERT_TRUE(e.code() == ErrorCode::kNoEligibleItems || e.code() == ErrorCode::kInvalidArgument)
          << e.what();
    }
    EXPECT_LE(steps, ids.size());
  }
}

TEST(RecommendationJson, Shape) {
  auto s = fixture_session();
  const auto rec = chat(s, kCanonicalQuery, 2, nullptr);
  const auto j = to_json(rec, *s.menu);
  EXPECT_EQ(j["ranked"][0]["item_id"], "0.0");
  EXPECT_EQ(j["ranked"][0]["name"], "Grilled Octopus");
  EXPECT_EQ(j["ranked"][0]["price"]["amount_minor"], 1450);
  EXPECT_EQ(j["ranked"][0]["rationale"], nlohmann::ordered_json::array({"grilled", "octopus"}));
  EXPECT_EQ(j["degraded"], true);
  EXPECT_TRUE(j["evidence"].is_array());
  EXPECT_EQ(j["text"], rec.text);
}

}  // namespace
}  // namespace menulens
