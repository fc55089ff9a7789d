#pragma once

#include <string>
#include <string_view>
#include <vector>

// UTF-8 text helpers backed by ICU. All functions take and return UTF-8.
namespace menulens::unicode {

std::string nfc(std::string_view text);
std::string nfkc(std::string_view text);

/// Full Unicode case folding (ß -> ss, final sigma -> sigma).
std::string casefold(std::string_view text);

/// Decodes UTF-8 into code points; invalid sequences become U+FFFD.
std::u32string to_code_points(std::string_view text);
std::string from_code_points(std::u32string_view cps);

std::size_t length(std::string_view text);

bool is_letter(char32_t cp);
bool is_upper(char32_t cp);
bool is_lower(char32_t cp);
bool is_alnum(char32_t cp);
bool is_space(char32_t cp);
bool is_punct(char32_t cp);
bool is_greek(char32_t cp);

/// Strips leading/trailing Unicode whitespace.
std::string trim(std::string_view text);

bool is_valid_utf8(std::string_view text);

}  // namespace menulens::unicode
