#include "menulens/prefs.hpp"

#include <algorithm>
#include <cmath>

#include "json_util.hpp"
#include "lexicon_data.hpp"
#include "menulens/error.hpp"
#include "menulens/text.hpp"
#include "menulens/unicode.hpp"

namespace menulens {

PreferenceIndex PreferenceIndex::build(std::span<const PreferenceDoc> docs, Bm25Params params) {
  PreferenceIndex index;
  index.params_ = params;
  for (const auto& doc : docs) {
    if (index.docs_.contains(doc.id)) {
      throw Error(ErrorCode::kDuplicateDoc, "duplicate preference document id '" + doc.id + "'");
    }
    index.docs_.emplace(doc.id, doc);
  }
  // docs_ iterates in id order, so every postings list comes out sorted.
  std::size_t total = 0;
  for (const auto& [id, doc] : index.docs_) {
    const auto terms = tokenize(doc.text);
    index.doc_len_[id] = terms.size();
    total += terms.size();
    std::map<std::string, int> tf;
    for (const auto& t : terms) ++tf[t];
    for (const auto& [term, count] : tf) index.postings_[term].push_back({id, count});
  }
  if (!index.doc_len_.empty()) {
    index.avg_len_ = static_cast<double>(total) / static_cast<double>(index.doc_len_.size());
  }
  return index;
}

std::size_t PreferenceIndex::document_frequency(const std::string& term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? 0 : it->second.size();
}

int PreferenceIndex::term_frequency(const std::string& term, const std::string& doc_id) const {
  auto it = postings_.find(term);
  if (it == postings_.end()) return 0;
  const auto& list = it->second;
  auto pos = std::lower_bound(list.begin(), list.end(), doc_id,
                              [](const Posting& p, const std::string& id) { return p.doc_id < id; });
  return pos != list.end() && pos->doc_id == doc_id ? pos->term_frequency : 0;
}

const PreferenceDoc* PreferenceIndex::doc(const std::string& doc_id) const {
  auto it = docs_.find(doc_id);
  return it == docs_.end() ? nullptr : &it->second;
}

PreferenceIndex index_docs(std::span<const PreferenceDoc> docs, Bm25Params params) {
  return PreferenceIndex::build(docs, params);
}

double bm25_idf(std::size_t doc_count, std::size_t df) {
  const double n = static_cast<double>(doc_count);
  const double d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double bm25_score(const PreferenceIndex& index, std::span<const std::string> query_terms,
                  const std::string& doc_id) {
  auto len_it = index.doc_lengths().find(doc_id);
  if (len_it == index.doc_lengths().end()) {
    throw Error(ErrorCode::kNotFound, "unknown preference document '" + doc_id + "'");
  }
  if (index.avg_len() <= 0) return 0.0;
  const double k1 = index.params().k1;
  const double b = index.params().b;
  const double len_ratio = static_cast<double>(len_it->second) / index.avg_len();
  double score = 0.0;
  for (const auto& term : query_terms) {
    const int tf = index.term_frequency(term, doc_id);
    if (tf == 0) continue;
    const double idf = bm25_idf(index.doc_count(), index.document_frequency(term));
    score += idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * len_ratio));
  }
  return score;
}

std::vector<ScoredDoc> retrieve_topk(const PreferenceIndex& index,
                                     std::span<const std::string> query_terms, std::size_t k) {
  if (k == 0) return {};
  std::set<std::string> candidates;
  for (const auto& term : query_terms) {
    auto it = index.postings().find(term);
    if (it == index.postings().end()) continue;
    for (const auto& p : it->second) candidates.insert(p.doc_id);
  }
  std::vector<ScoredDoc> scored;
  for (const auto& id : candidates) {
    const double s = bm25_score(index, query_terms, id);
    if (s > 0) scored.push_back({id, s});
  }
  auto better = [](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  };
  if (scored.size() > k) {
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(), better);
    scored.resize(k);
  } else {
    std::sort(scored.begin(), scored.end(), better);
  }
  return scored;
}

std::vector<ScoredDoc> retrieve_topk(const PreferenceIndex& index, std::string_view query,
                                     std::size_t k) {
  const auto terms = tokenize(query);
  return retrieve_topk(index, terms, k);
}

namespace {

std::string fold_term(std::string_view term) {
  return unicode::casefold(unicode::nfkc(unicode::trim(term)));
}

std::map<std::string, std::set<std::string>> term_table(const nlohmann::json& j,
                                                        const std::string& key) {
  std::map<std::string, std::set<std::string>> table;
  auto it = j.find(key);
  if (it == j.end()) return table;
  if (!it->is_object()) throw Error::schema(key, "expected an object");
  for (const auto& [name, languages] : it->items()) {
    if (!languages.is_object()) throw Error::schema(name, "expected language -> terms");
    auto& terms = table[fold_term(name)];
    for (const auto& [lang, list] : languages.items()) {
      if (!list.is_array()) throw Error::schema(lang, "expected an array of terms");
      for (const auto& term : list) {
        if (!term.is_string()) throw Error::schema(lang, "expected strings");
        terms.insert(fold_term(term.get<std::string>()));
      }
    }
  }
  return table;
}

}  // namespace

AllergenLexicon AllergenLexicon::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error::schema("$", "lexicon root must be an object");
  AllergenLexicon lexicon;
  lexicon.allergens_ = term_table(j, "allergens");
  lexicon.diets_ = term_table(j, "diets");
  return lexicon;
}

AllergenLexicon AllergenLexicon::parse(std::string_view bytes) {
  return from_json(detail::parse_json(bytes));
}

const AllergenLexicon& AllergenLexicon::bundled() {
  static const AllergenLexicon lexicon = parse(detail::kBundledLexicon);
  return lexicon;
}

std::set<std::string> AllergenLexicon::allergen_terms(const std::string& allergen) const {
  const std::string key = fold_term(allergen);
  std::set<std::string> terms{key};
  if (auto it = allergens_.find(key); it != allergens_.end()) {
    terms.insert(it->second.begin(), it->second.end());
  }
  return terms;
}

std::set<std::string> AllergenLexicon::diet_terms(const std::string& diet) const {
  if (auto it = diets_.find(fold_term(diet)); it != diets_.end()) return it->second;
  return {};
}

ConstraintExtraction extract_constraints(std::span<const PreferenceDoc> docs,
                                         const AllergenLexicon& lexicon) {
  ConstraintExtraction out;
  auto& c = out.constraints;
  for (const auto& doc : docs) {
    for (const auto& tag : doc.tags) {
      const auto colon = tag.find(':');
      const std::string key = colon == std::string::npos ? tag : tag.substr(0, colon);
      const std::string value =
          colon == std::string::npos ? std::string() : fold_term(tag.substr(colon + 1));
      if (value.empty() && (key == "allergen" || key == "likes" || key == "dislikes" || key == "diet")) {
        out.warnings.push_back(doc.id + ": tag '" + tag + "' has no value");
        continue;
      }
      if (key == "allergen") {
        if (!lexicon.has_allergen(value)) {
          out.warnings.push_back(doc.id + ": allergen '" + value + "' is not in the lexicon");
        }
        const auto terms = lexicon.allergen_terms(value);
        c.hard_exclusions.insert(terms.begin(), terms.end());
      } else if (key == "diet") {
        const auto terms = lexicon.diet_terms(value);
        if (terms.empty()) out.warnings.push_back(doc.id + ": diet '" + value + "' is not in the lexicon");
        c.hard_exclusions.insert(terms.begin(), terms.end());
      } else if (key == "likes") {
        c.soft_likes.insert(value);
      } else if (key == "dislikes") {
        c.soft_dislikes.insert(value);
      } else {
        out.warnings.push_back(doc.id + ": ignoring tag with unknown key '" + key + "'");
      }
    }
  }
  std::set<std::string> both;
  std::set_intersection(c.soft_likes.begin(), c.soft_likes.end(), c.soft_dislikes.begin(),
                        c.soft_dislikes.end(), std::inserter(both, both.end()));
  for (const auto& t : both) {
    c.soft_likes.erase(t);
    c.soft_dislikes.erase(t);
  }
  for (const auto& t : c.hard_exclusions) {
    c.soft_likes.erase(t);
    c.soft_dislikes.erase(t);
  }
  return out;
}

nlohmann::json to_json(const ConstraintSet& constraints) {
  return {{"hard_exclusions", constraints.hard_exclusions},
          {"soft_likes", constraints.soft_likes},
          {"soft_dislikes", constraints.soft_dislikes}};
}

}  // namespace menulens
