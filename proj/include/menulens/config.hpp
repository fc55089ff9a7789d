#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace menulens {

/// Flat `key = value` settings file. Lines starting with '#' are comments;
/// values may be wrapped in double quotes. Keys are dotted, e.g.
/// llm.endpoint. See README for the recognised keys.
class Config {
 public:
  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  /// --config value, else $MENULENS_CONFIG, else ~/.menulens.conf when it
  /// exists, else an empty config.
  static Config discover(const std::string& explicit_path);

  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace menulens
