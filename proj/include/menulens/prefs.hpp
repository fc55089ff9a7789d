#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace menulens {

enum class PrefSource { kTransactions, kPhotos, kPlaces, kManual };

std::string_view pref_source_name(PrefSource source);

struct PreferenceDoc {
  std::string id;
  PrefSource source = PrefSource::kManual;
  std::string text;
  /// "key:value" strings such as allergen:peanut or likes:seafood.
  std::vector<std::string> tags;
  std::optional<std::chrono::sys_seconds> timestamp;
  friend bool operator==(const PreferenceDoc&, const PreferenceDoc&) = default;
};

/// "YYYY-MM-DD" or "YYYY-MM-DDTHH:MM:SSZ"; empty on anything else.
std::optional<std::chrono::sys_seconds> parse_utc_instant(std::string_view text);
std::string format_utc_instant(std::chrono::sys_seconds instant);

struct ImportResult {
  std::vector<PreferenceDoc> docs;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

/// CSV with header date,merchant,amount,currency,category (any column order,
/// extra columns ignored). Rows with an unparseable date are skipped and
/// counted. Missing columns throw kSchemaError naming the column.
ImportResult import_transactions(std::string_view csv_bytes);
/// JSON array of {name, note?, tags?}.
ImportResult import_places(std::string_view json_bytes);
/// JSON array of {caption, labels[], tags?}.
ImportResult import_photos_metadata(std::string_view json_bytes);
/// JSON array of {id?, text, tags?, timestamp?}; the place for allergens.
ImportResult import_manual(std::string_view json_bytes);

/// Loads transactions.csv, places.json, photos.json and manual.json from a
/// profile directory; absent files are skipped. Throws kNotFound when the
/// directory does not exist.
ImportResult load_preference_dir(const std::filesystem::path& dir);

nlohmann::json to_json(const PreferenceDoc& doc);
PreferenceDoc preference_doc_from_json(const nlohmann::json& j);

struct Posting {
  std::string doc_id;
  int term_frequency = 0;
  friend bool operator==(const Posting&, const Posting&) = default;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Immutable lexical index; safe to share between threads once built.
class PreferenceIndex {
 public:
  /// Throws kDuplicateDoc when two documents share an id.
  static PreferenceIndex build(std::span<const PreferenceDoc> docs, Bm25Params params = {});

  std::size_t doc_count() const { return doc_len_.size(); }
  double avg_len() const { return avg_len_; }
  const std::map<std::string, std::vector<Posting>>& postings() const { return postings_; }
  const std::map<std::string, std::size_t>& doc_lengths() const { return doc_len_; }
  std::size_t document_frequency(const std::string& term) const;
  int term_frequency(const std::string& term, const std::string& doc_id) const;
  bool contains(const std::string& doc_id) const { return doc_len_.contains(doc_id); }
  const PreferenceDoc* doc(const std::string& doc_id) const;
  const Bm25Params& params() const { return params_; }

 private:
  std::map<std::string, std::vector<Posting>> postings_;
  std::map<std::string, std::size_t> doc_len_;
  std::map<std::string, PreferenceDoc> docs_;
  double avg_len_ = 0;
  Bm25Params params_;
};

PreferenceIndex index_docs(std::span<const PreferenceDoc> docs, Bm25Params params = {});

/// ln(1 + (N - df + 0.5) / (df + 0.5)).
double bm25_idf(std::size_t doc_count, std::size_t df);

/// Okapi BM25 summed over the query terms in order. Throws kNotFound for an
/// unknown document.
double bm25_score(const PreferenceIndex& index, std::span<const std::string> query_terms,
                  const std::string& doc_id);

struct ScoredDoc {
  std::string doc_id;
  double score = 0;
  friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// Top k by score (ties: doc id ascending); zero scores are left out.
std::vector<ScoredDoc> retrieve_topk(const PreferenceIndex& index,
                                     std::span<const std::string> query_terms, std::size_t k);
std::vector<ScoredDoc> retrieve_topk(const PreferenceIndex& index, std::string_view query,
                                     std::size_t k);

struct ConstraintSet {
  std::set<std::string> hard_exclusions;
  std::set<std::string> soft_likes;
  std::set<std::string> soft_dislikes;
  friend bool operator==(const ConstraintSet&, const ConstraintSet&) = default;
};

/// Allergen and diet term lists per language.
class AllergenLexicon {
 public:
  /// {"allergens": {name: {lang: [terms]}}, "diets": {name: {lang: [terms]}}}.
  static AllergenLexicon from_json(const nlohmann::json& j);
  static AllergenLexicon parse(std::string_view bytes);
  /// The lexicon compiled into the library from data/allergen_lexicon.json.
  static const AllergenLexicon& bundled();

  /// Case-folded terms for an allergen, always including the allergen name.
  std::set<std::string> allergen_terms(const std::string& allergen) const;
  std::set<std::string> diet_terms(const std::string& diet) const;
  bool has_allergen(const std::string& allergen) const { return allergens_.contains(allergen); }

 private:
  std::map<std::string, std::set<std::string>> allergens_;
  std::map<std::string, std::set<std::string>> diets_;
};

struct ConstraintExtraction {
  ConstraintSet constraints;
  std::vector<std::string> warnings;
};

/// allergen:X and diet:X expand through the lexicon into hard exclusions;
/// likes:/dislikes: become soft terms. Hard terms are removed from the soft
/// sets, and a term both liked and disliked is dropped from both.
ConstraintExtraction extract_constraints(std::span<const PreferenceDoc> docs,
                                         const AllergenLexicon& lexicon = AllergenLexicon::bundled());

nlohmann::json to_json(const ConstraintSet& constraints);

}  // namespace menulens
