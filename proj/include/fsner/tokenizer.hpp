#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fsner {

/// A text piece with its position in the source document. Offsets count
/// Unicode scalar values, end is exclusive.
struct Token {
  std::size_t index = 0;
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

/// Half-open token interval [begin, end).
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
  friend auto operator<=>(const TokenSpan&, const TokenSpan&) = default;
};

/// Half-open character interval, in scalar values.
struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

/// Rule-based tokenization.
///
/// Whitespace runs separate chunks. Punctuation and symbol characters
/// (categories P* and S*) at either end of a chunk become one token each.
/// Inside a chunk, apostrophes and hyphens that sit between word characters
/// stay in the word, except for elision: a word made only of letters followed
/// by an apostrophe ("l'", "qu'") is cut right after the apostrophe. Any
/// other interior punctuation character is its own token.
///
/// Ill-formed UTF-8 is read as U+FFFD per bad sequence.
std::vector<Token> tokenize(std::string_view text);

/// Same rules over already-decoded text.
std::vector<Token> tokenize(std::u32string_view text);

/// Character extent of a token interval. The interval must be valid for
/// `tokens`.
CharSpan token_extent(std::span<const Token> tokens, TokenSpan span);

/// Finds the token interval whose character extent is exactly
/// [start_char, end_char). Returns nullopt when either boundary falls inside
/// a token or in a gap. Throws std::out_of_range unless
/// start_char < end_char <= text_length.
std::optional<TokenSpan> align_span(std::span<const Token> tokens, std::size_t text_length,
                                    std::size_t start_char, std::size_t end_char);

}  // namespace fsner
