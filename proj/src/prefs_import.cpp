#include <charconv>
#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "menulens/error.hpp"
#include "menulens/prefs.hpp"
#include "menulens/unicode.hpp"

namespace menulens {
namespace {

std::vector<std::vector<std::string>> parse_csv(std::string_view bytes) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const char c = bytes[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < bytes.size() && bytes[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else if (c == '\r') {
      // CRLF line endings
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw Error::parse(bytes.size(), "unterminated quoted CSV field");
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

nlohmann::json parse_array_root(std::string_view bytes, const char* what) {
  nlohmann::json j = detail::parse_json(bytes);
  if (!j.is_array()) throw Error::schema("$", std::string(what) + " root must be an array");
  return j;
}

std::vector<std::string> tags_from(const nlohmann::json& entry) {
  std::vector<std::string> tags;
  auto it = entry.find("tags");
  if (it == entry.end() || it->is_null()) return tags;
  if (!it->is_array()) throw Error::schema("tags", "expected an array of strings");
  for (const auto& t : *it) {
    if (!t.is_string()) throw Error::schema("tags", "expected an array of strings");
    tags.push_back(unicode::nfc(t.get<std::string>()));
  }
  return tags;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void append(ImportResult& into, ImportResult&& from) {
  for (auto& d : from.docs) into.docs.push_back(std::move(d));
  into.skipped += from.skipped;
  for (auto& w : from.warnings) into.warnings.push_back(std::move(w));
}

}  // namespace

/// Accepts "YYYY-MM-DD" and "YYYY-MM-DDTHH:MM:SSZ".
std::optional<std::chrono::sys_seconds> parse_utc_instant(std::string_view s) {
  using namespace std::chrono;
  if (s.size() != 10 && s.size() != 20) return std::nullopt;
  if (s[4] != '-' || s[7] != '-') return std::nullopt;
  const auto y = parse_int(s.substr(0, 4));
  const auto m = parse_int(s.substr(5, 2));
  const auto d = parse_int(s.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*m)}, day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  sys_seconds t = sys_days{ymd};
  if (s.size() == 20) {
    if (s[10] != 'T' || s[13] != ':' || s[16] != ':' || s[19] != 'Z') return std::nullopt;
    const auto hh = parse_int(s.substr(11, 2));
    const auto mm = parse_int(s.substr(14, 2));
    const auto ss = parse_int(s.substr(17, 2));
    if (!hh || !mm || !ss || *hh > 23 || *mm > 59 || *ss > 59) return std::nullopt;
    t += hours{*hh} + minutes{*mm} + seconds{*ss};
  }
  return t;
}

std::string format_utc_instant(std::chrono::sys_seconds t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{t - day_point};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

std::string_view pref_source_name(PrefSource source) {
  switch (source) {
    case PrefSource::kTransactions: return "transactions";
    case PrefSource::kPhotos: return "photos";
    case PrefSource::kPlaces: return "places";
    case PrefSource::kManual: return "manual";
  }
  return "manual";
}

ImportResult import_transactions(std::string_view csv_bytes) {
  if (!unicode::is_valid_utf8(csv_bytes)) throw Error::parse(0, "input is not valid UTF-8");
  const auto rows = parse_csv(csv_bytes);
  if (rows.empty()) throw Error::schema("date", "missing header row");
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < rows[0].size(); ++i) column[unicode::trim(rows[0][i])] = i;
  for (const char* required : {"date", "merchant", "amount", "currency", "category"}) {
    if (!column.contains(required)) throw Error::schema(required, "missing CSV column");
  }
  ImportResult result;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto cell = [&](const char* name) -> std::string {
      const std::size_t idx = column.at(name);
      return idx < row.size() ? unicode::trim(row[idx]) : std::string();
    };
    const auto when = parse_utc_instant(cell("date"));
    if (!when) {
      ++result.skipped;
      result.warnings.push_back("row " + std::to_string(r) + ": bad date '" + cell("date") + "'");
      continue;
    }
    PreferenceDoc doc;
    doc.id = "txn-" + std::to_string(r);
    doc.source = PrefSource::kTransactions;
    doc.text = unicode::nfc(cell("merchant") + " " + cell("category"));
    doc.timestamp = when;
    result.docs.push_back(std::move(doc));
  }
  return result;
}

ImportResult import_places(std::string_view json_bytes) {
  const auto root = parse_array_root(json_bytes, "places");
  ImportResult result;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const auto& entry = root[i];
    PreferenceDoc doc;
    doc.id = "place-" + std::to_string(i + 1);
    doc.source = PrefSource::kPlaces;
    doc.text = unicode::nfc(detail::require_string(entry, "name"));
    if (auto note = entry.find("note"); note != entry.end() && !note->is_null()) {
      if (!note->is_string()) throw Error::schema("note", "expected a string");
      doc.text += " " + unicode::nfc(note->get<std::string>());
    }
    doc.tags = tags_from(entry);
    result.docs.push_back(std::move(doc));
  }
  return result;
}

ImportResult import_photos_metadata(std::string_view json_bytes) {
  const auto root = parse_array_root(json_bytes, "photos");
  ImportResult result;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const auto& entry = root[i];
    PreferenceDoc doc;
    doc.id = "photo-" + std::to_string(i + 1);
    doc.source = PrefSource::kPhotos;
    doc.text = unicode::nfc(detail::require_string(entry, "caption"));
    for (const auto& label : detail::require_array(entry, "labels")) {
      if (!label.is_string()) throw Error::schema("labels", "expected strings");
      doc.text += " " + unicode::nfc(label.get<std::string>());
    }
    doc.tags = tags_from(entry);
    result.docs.push_back(std::move(doc));
  }
  return result;
}

ImportResult import_manual(std::string_view json_bytes) {
  const auto root = parse_array_root(json_bytes, "manual");
  ImportResult result;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const auto& entry = root[i];
    PreferenceDoc doc;
    doc.id = "manual-" + std::to_string(i + 1);
    if (auto id = entry.find("id"); id != entry.end() && !id->is_null()) {
      doc.id = detail::require_string(entry, "id");
    }
    doc.source = PrefSource::kManual;
    doc.text = unicode::nfc(detail::require_string(entry, "text"));
    doc.tags = tags_from(entry);
    if (auto ts = entry.find("timestamp"); ts != entry.end() && !ts->is_null()) {
      doc.timestamp = parse_utc_instant(detail::require_string(entry, "timestamp"));
      if (!doc.timestamp) throw Error::schema("timestamp", "expected an ISO-8601 UTC instant");
    }
    result.docs.push_back(std::move(doc));
  }
  return result;
}

ImportResult load_preference_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kNotFound, "preference directory not found: " + dir.string());
  }
  ImportResult all;
  if (auto p = dir / "transactions.csv"; std::filesystem::exists(p)) {
    append(all, import_transactions(read_file(p)));
  }
  if (auto p = dir / "places.json"; std::filesystem::exists(p)) append(all, import_places(read_file(p)));
  if (auto p = dir / "photos.json"; std::filesystem::exists(p)) {
    append(all, import_photos_metadata(read_file(p)));
  }
  if (auto p = dir / "manual.json"; std::filesystem::exists(p)) append(all, import_manual(read_file(p)));
  return all;
}

nlohmann::json to_json(const PreferenceDoc& doc) {
  return {{"id", doc.id},
          {"source", pref_source_name(doc.source)},
          {"text", doc.text},
          {"tags", doc.tags},
          {"timestamp", doc.timestamp ? nlohmann::json(format_utc_instant(*doc.timestamp))
                                      : nlohmann::json(nullptr)}};
}

PreferenceDoc preference_doc_from_json(const nlohmann::json& j) {
  PreferenceDoc doc;
  doc.id = detail::require_string(j, "id");
  const std::string source = detail::require_string(j, "source");
  if (source == "transactions") {
    doc.source = PrefSource::kTransactions;
  } else if (source == "photos") {
    doc.source = PrefSource::kPhotos;
  } else if (source == "places") {
    doc.source = PrefSource::kPlaces;
  } else if (source == "manual") {
    doc.source = PrefSource::kManual;
  } else {
    throw Error::schema("source", "unknown source '" + source + "'");
  }
  doc.text = detail::require_string(j, "text");
  doc.tags = tags_from(j);
  if (auto ts = j.find("timestamp"); ts != j.end() && !ts->is_null()) {
    doc.timestamp = parse_utc_instant(detail::require_string(j, "timestamp"));
    if (!doc.timestamp) throw Error::schema("timestamp", "expected an ISO-8601 UTC instant");
  }
  return doc;
}

}  // namespace menulens
