#include "menulens/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "menulens/error.hpp"
#include "menulens/text.hpp"
#include "menulens/unicode.hpp"

namespace menulens {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::filesystem::path> json_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kNotFound, "directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

GroundTruthMenu ground_truth_from_json(const nlohmann::json& j) {
  GroundTruthMenu truth;
  truth.menu_id = detail::require_string(j, "menu_id");
  truth.language = detail::require_string(j, "language");
  std::set<std::string> seen;
  for (const auto& name : detail::require_array(j, "items")) {
    if (!name.is_string()) throw Error::schema("items", "expected strings");
    const std::string s = unicode::nfc(name.get<std::string>());
    const std::string key = normalize_name(s);
    if (key.empty()) throw Error::schema("items", "empty item name");
    if (!seen.insert(key).second) throw Error::schema("items", "duplicate item name '" + s + "'");
    truth.items.push_back(s);
  }
  return truth;
}

std::vector<MatchPair> match_items(std::span<const std::string> parsed,
                                   std::span<const std::string> truth, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "match threshold must lie in (0, 1]");
  }
  std::vector<std::u32string> p_norm;
  std::vector<std::u32string> t_norm;
  for (const auto& s : parsed) p_norm.push_back(unicode::to_code_points(normalize_name(s)));
  for (const auto& s : truth) t_norm.push_back(unicode::to_code_points(normalize_name(s)));

  std::vector<MatchPair> candidates;
  for (std::size_t t = 0; t < t_norm.size(); ++t) {
    for (std::size_t p = 0; p < p_norm.size(); ++p) {
      const std::size_t longest = std::max(p_norm[p].size(), t_norm[t].size());
      const double sim =
          longest == 0 ? 1.0
                       : 1.0 - static_cast<double>(levenshtein(p_norm[p], t_norm[t])) /
                                   static_cast<double>(longest);
      if (sim >= threshold) candidates.push_back({p, t, sim});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const MatchPair& a, const MatchPair& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    if (a.truth_index != b.truth_index) return a.truth_index < b.truth_index;
    return a.parsed_index < b.parsed_index;
  });
  std::vector<bool> p_used(parsed.size());
  std::vector<bool> t_used(truth.size());
  std::vector<MatchPair> out;
  for (const auto& c : candidates) {
    if (p_used[c.parsed_index] || t_used[c.truth_index]) continue;
    p_used[c.parsed_index] = true;
    t_used[c.truth_index] = true;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> item_names(const DigitalMenu& menu) {
  std::vector<std::string> names;
  for (const auto& s : menu.sections) {
    for (const auto& i : s.items) names.push_back(i.name);
  }
  return names;
}

RecallReport recall_report(const std::map<std::string, DigitalMenu>& parsed,
                           std::span<const GroundTruthMenu> truth, double threshold) {
  std::map<std::string, const GroundTruthMenu*> by_id;
  for (const auto& t : truth) by_id[t.menu_id] = &t;
  for (const auto& [id, _] : parsed) {
    if (!by_id.contains(id)) {
      throw Error(ErrorCode::kMissingTruth, "no ground truth for parsed menu '" + id + "'");
    }
  }
  RecallReport report;
  double macro_sum = 0;
  for (const auto& [id, t] : by_id) {
    std::vector<std::string> names;
    if (auto it = parsed.find(id); it != parsed.end()) names = item_names(it->second);
    const auto pairs = match_items(names, t->items, threshold);
    std::vector<bool> hit(t->items.size());
    for (const auto& m : pairs) hit[m.truth_index] = true;
    for (std::size_t i = 0; i < t->items.size(); ++i) {
      if (!hit[i]) report.unmatched.emplace_back(id, t->items[i]);
    }
    MenuRecall r;
    r.matched = pairs.size();
    r.total = t->items.size();
    r.recall = r.total == 0 ? 1.0 : static_cast<double>(r.matched) / static_cast<double>(r.total);
    report.matched += r.matched;
    report.total += r.total;
    macro_sum += r.recall;
    report.per_menu[id] = r;
  }
  report.aggregate_recall =
      report.total == 0 ? 1.0 : static_cast<double>(report.matched) / static_cast<double>(report.total);
  report.macro_recall = by_id.empty() ? 1.0 : macro_sum / static_cast<double>(by_id.size());
  return report;
}

nlohmann::ordered_json to_json(const RecallReport& report) {
  nlohmann::ordered_json j;
  auto& per = j["per_menu"] = nlohmann::ordered_json::object();
  for (const auto& [id, r] : report.per_menu) {
    nlohmann::ordered_json m;
    m["matched"] = r.matched;
    m["total"] = r.total;
    m["recall"] = r.recall;
    per[id] = m;
  }
  j["matched"] = report.matched;
  j["total"] = report.total;
  j["aggregate_recall"] = report.aggregate_recall;
  j["macro_recall"] = report.macro_recall;
  auto& un = j["unmatched"] = nlohmann::ordered_json::array();
  for (const auto& [id, name] : report.unmatched) {
    nlohmann::ordered_json u;
    u["menu_id"] = id;
    u["item"] = name;
    un.push_back(u);
  }
  return j;
}

std::string format_recall_table(const RecallReport& report) {
  std::string out = "menu                 matched  total  recall\n";
  for (const auto& [id, r] : report.per_menu) {
    char line[160];
    std::snprintf(line, sizeof line, "%-20s %7zu %6zu  %s\n", id.c_str(), r.matched, r.total,
                  fixed(r.recall, 4).c_str());
    out += line;
  }
  char line[160];
  std::snprintf(line, sizeof line, "%-20s %7zu %6zu  %s (macro %s)\n", "TOTAL", report.matched,
                report.total, fixed(report.aggregate_recall, 4).c_str(),
                fixed(report.macro_recall, 4).c_str());
  out += line;
  for (const auto& [id, name] : report.unmatched) out += "unmatched: " + id + ": " + name + "\n";
  return out;
}

std::map<std::string, DigitalMenu> load_parsed_dir(const std::filesystem::path& dir) {
  std::map<std::string, DigitalMenu> out;
  for (const auto& path : json_files(dir)) out[path.stem().string()] = parse_menu_json(read_file(path));
  return out;
}

std::vector<GroundTruthMenu> load_truth_dir(const std::filesystem::path& dir) {
  std::vector<GroundTruthMenu> out;
  for (const auto& path : json_files(dir)) {
    out.push_back(ground_truth_from_json(detail::parse_json(read_file(path))));
  }
  return out;
}

}  // namespace menulens
