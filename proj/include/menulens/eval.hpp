#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "menulens/menu.hpp"

namespace menulens {

struct GroundTruthMenu {
  std::string menu_id;
  std::string language;
  std::vector<std::string> items;
};

/// {"menu_id", "language", "items": [str]}; names must be non-empty and
/// unique after normalize_name.
GroundTruthMenu ground_truth_from_json(const nlohmann::json& j);

struct MatchPair {
  std::size_t parsed_index = 0;
  std::size_t truth_index = 0;
  double similarity = 0;
  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

inline constexpr double kDefaultMatchThreshold = 0.8;

/// Greedy one-to-one matching: all pairs with similarity >= threshold,
/// best first (ties: truth index, then parsed index), each name used once.
std::vector<MatchPair> match_items(std::span<const std::string> parsed,
                                   std::span<const std::string> truth,
                                   double threshold = kDefaultMatchThreshold);

struct MenuRecall {
  std::size_t matched = 0;
  std::size_t total = 0;
  double recall = 0;
};

struct RecallReport {
  std::map<std::string, MenuRecall> per_menu;
  double aggregate_recall = 0;  // micro average
  double macro_recall = 0;
  std::vector<std::pair<std::string, std::string>> unmatched;  // (menu id, truth name)
  std::size_t matched = 0;
  std::size_t total = 0;
};

/// Item names of a parsed menu in menu order.
std::vector<std::string> item_names(const DigitalMenu& menu);

/// Scores each parsed menu against the truth menu with the same id. Throws
/// kMissingTruth when a parsed id has no truth menu. Truth menus without a
/// parsed counterpart count as fully missed.
RecallReport recall_report(const std::map<std::string, DigitalMenu>& parsed,
                           std::span<const GroundTruthMenu> truth,
                           double threshold = kDefaultMatchThreshold);

nlohmann::ordered_json to_json(const RecallReport& report);
std::string format_recall_table(const RecallReport& report);

/// Parsed menus (<id>.json, id from the file stem) and truth menus from two
/// directories.
std::map<std::string, DigitalMenu> load_parsed_dir(const std::filesystem::path& dir);
std::vector<GroundTruthMenu> load_truth_dir(const std::filesystem::path& dir);

}  // namespace menulens
