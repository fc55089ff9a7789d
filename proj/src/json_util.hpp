#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "menulens/error.hpp"

// Schema-checked accessors that turn nlohmann type errors into kSchemaError
// naming the offending field.
namespace menulens::detail {

inline const nlohmann::json& require(const nlohmann::json& j, const std::string& key) {
  if (!j.is_object()) throw Error::schema(key, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw Error::schema(key, "missing");
  return *it;
}

inline std::string require_string(const nlohmann::json& j, const std::string& key) {
  const auto& v = require(j, key);
  if (!v.is_string()) throw Error::schema(key, "expected a string");
  return v.get<std::string>();
}

inline double require_number(const nlohmann::json& j, const std::string& key) {
  const auto& v = require(j, key);
  if (!v.is_number()) throw Error::schema(key, "expected a number");
  return v.get<double>();
}

inline long long require_integer(const nlohmann::json& j, const std::string& key) {
  const auto& v = require(j, key);
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == static_cast<double>(static_cast<long long>(d))) return static_cast<long long>(d);
  }
  throw Error::schema(key, "expected an integer");
}

inline const nlohmann::json& require_array(const nlohmann::json& j, const std::string& key) {
  const auto& v = require(j, key);
  if (!v.is_array()) throw Error::schema(key, "expected an array");
  return v;
}

/// Parses UTF-8 JSON text, mapping syntax errors to kParseError with the
/// byte offset reported by the parser.
inline nlohmann::json parse_json(std::string_view bytes) {
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error::parse(e.byte, e.what());
  }
}

}  // namespace menulens::detail
