#pragma once

#include <string>
#include <string_view>

namespace fsner::unicode {

/// Decodes UTF-8 into Unicode scalar values. Each ill-formed byte sequence
/// becomes U+FFFD, so the function is total.
std::u32string decode(std::string_view utf8);

std::string encode(std::u32string_view text);
std::string encode(char32_t cp);

/// Number of scalar values in a UTF-8 string, counted the same way decode() does.
std::size_t length(std::string_view utf8);

bool is_valid_utf8(std::string_view utf8);

// Character classes used by the tokenizer.
bool is_space(char32_t cp);              // White_Space property
bool is_punct_or_symbol(char32_t cp);    // general category P* or S*
bool is_letter(char32_t cp);             // general category L*
bool is_apostrophe(char32_t cp);
bool is_hyphen(char32_t cp);

}  // namespace fsner::unicode
