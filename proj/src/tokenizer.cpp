#include "fsner/tokenizer.hpp"

#include <algorithm>
#include <stdexcept>

#include "fsner/unicode.hpp"

namespace fsner {
namespace {

using unicode::is_apostrophe;
using unicode::is_hyphen;
using unicode::is_letter;
using unicode::is_punct_or_symbol;
using unicode::is_space;

bool is_joiner(char32_t cp) { return is_apostrophe(cp) || is_hyphen(cp); }

class Emitter {
 public:
  Emitter(std::u32string_view text, std::vector<Token>& out) : text_(text), out_(out) {}

  void emit(std::size_t begin, std::size_t end) {
    if (begin >= end) return;
    out_.push_back(Token{out_.size(), unicode::encode(text_.substr(begin, end - begin)), begin, end});
  }

 private:
  std::u32string_view text_;
  std::vector<Token>& out_;
};

void split_core(std::u32string_view text, std::size_t begin, std::size_t end, Emitter& emit) {
  std::size_t word = begin;
  std::size_t j = begin;
  while (j < end) {
    const char32_t c = text[j];
    if (!is_punct_or_symbol(c)) {
      ++j;
      continue;
    }
    if (is_joiner(c)) {
      std::size_t k = j;
      while (k < end && is_joiner(text[k])) ++k;
      const bool joins = j > word && k < end && !is_punct_or_symbol(text[k]);
      if (joins) {
        const bool elision = k == j + 1 && is_apostrophe(c) &&
                             std::all_of(text.begin() + static_cast<std::ptrdiff_t>(word),
                                         text.begin() + static_cast<std::ptrdiff_t>(j), is_letter);
        if (elision) {
          emit.emit(word, j + 1);
          word = j + 1;
        }
        j = k;
        continue;
      }
      emit.emit(word, j);
      for (std::size_t p = j; p < k; ++p) emit.emit(p, p + 1);
      j = k;
      word = j;
      continue;
    }
    emit.emit(word, j);
    emit.emit(j, j + 1);
    ++j;
    word = j;
  }
  emit.emit(word, end);
}

}  // namespace

std::vector<Token> tokenize(std::u32string_view text) {
  std::vector<Token> tokens;
  Emitter emit(text, tokens);
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    while (i < n && is_space(text[i])) ++i;
    if (i == n) break;
    std::size_t a = i;
    while (i < n && !is_space(text[i])) ++i;
    std::size_t b = i;

    while (a < b && is_punct_or_symbol(text[a])) {
      emit.emit(a, a + 1);
      ++a;
    }
    std::size_t trail = b;
    while (trail > a && is_punct_or_symbol(text[trail - 1])) --trail;
    split_core(text, a, trail, emit);
    for (std::size_t p = trail; p < b; ++p) emit.emit(p, p + 1);
  }
  return tokens;
}

std::vector<Token> tokenize(std::string_view text) { return tokenize(unicode::decode(text)); }

CharSpan token_extent(std::span<const Token> tokens, TokenSpan span) {
  if (span.begin >= span.end || span.end > tokens.size()) {
    throw std::out_of_range("token_extent: invalid token interval");
  }
  return {tokens[span.begin].start, tokens[span.end - 1].end};
}

std::optional<TokenSpan> align_span(std::span<const Token> tokens, std::size_t text_length,
                                    std::size_t start_char, std::size_t end_char) {
  if (start_char >= end_char || end_char > text_length) {
    throw std::out_of_range("align_span: offsets [" + std::to_string(start_char) + ", " +
                            std::to_string(end_char) + ") outside text of length " +
                            std::to_string(text_length));
  }
  auto first = std::lower_bound(tokens.begin(), tokens.end(), start_char,
                                [](const Token& t, std::size_t c) { return t.start < c; });
  if (first == tokens.end() || first->start != start_char) return std::nullopt;
  auto last = std::lower_bound(first, tokens.end(), end_char,
                               [](const Token& t, std::size_t c) { return t.end < c; });
  if (last == tokens.end() || last->end != end_char) return std::nullopt;
  return TokenSpan{static_cast<std::size_t>(first - tokens.begin()),
                   static_cast<std::size_t>(last - tokens.begin()) + 1};
}

}  // namespace fsner
