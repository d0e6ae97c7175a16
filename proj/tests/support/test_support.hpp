#pragma once

// Fixture builders and random generators shared by the unit and acceptance
// suites. Nothing here calls into the code paths the tests check, except
// tokenize() to lay out fixture documents.

#include <cstdint>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "fsner/corpus.hpp"
#include "fsner/unicode.hpp"

namespace fsner::testing {

struct SpanSpec {
  std::size_t begin;
  std::size_t end;
  std::string label;
  int depth = 0;
};

/// Tokenizes `text` and labels tokens from the depth-0 spans.
inline Document make_document(std::string id, std::string text, std::vector<SpanSpec> spans = {}) {
  Document doc = document_from_text(std::move(id), std::move(text));
  doc.token_labels.assign(doc.tokens.size(), "O");
  for (const auto& s : spans) {
    doc.spans.push_back(GoldSpan{s.begin, s.end, s.label, s.depth});
    if (s.depth == 0) {
      for (std::size_t t = s.begin; t < s.end && t < doc.tokens.size(); ++t) doc.token_labels[t] = s.label;
    }
  }
  return doc;
}

/// Random valid UTF-8 strings biased toward the characters the tokenizer
/// distinguishes.
class TextGenerator {
 public:
  explicit TextGenerator(std::uint64_t seed) : rng_(seed) {}

  std::string next(std::size_t max_len = 40) {
    std::uniform_int_distribution<std::size_t> len_dist(0, max_len);
    const std::size_t len = len_dist(rng_);
    std::u32string s;
    for (std::size_t i = 0; i < len; ++i) s.push_back(code_point());
    return unicode::encode(s);
  }

  char32_t code_point() {
    static const std::u32string pools[] = {
        U"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ",
        U"0123456789",
        U" \t\n  　",
        U".,;:!?'’-‐\"()[]{}«»/\\&%",
        U"éèêàçœÉïô",
        U"€°+<=>|~^$§",
        U"中文ЖΩ\U0001F600\U0001D400",
        U"́̈​",
    };
    std::uniform_int_distribution<int> pick(0, 9);
    const int p = pick(rng_);
    if (p >= 8) {
      std::uniform_int_distribution<std::uint32_t> any(0, 0x10FFFF);
      for (;;) {
        const char32_t cp = any(rng_);
        if (cp < 0xD800 || cp > 0xDFFF) return cp;
      }
    }
    const std::u32string& pool = pools[p];
    std::uniform_int_distribution<std::size_t> idx(0, pool.size() - 1);
    return pool[idx(rng_)];
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// A short French-flavoured sample used for tokenizer and batch tests.
inline const std::vector<std::string>& french_sample() {
  static const std::vector<std::string> sample{
      "ABBEVILLE, (Géog.) ville de France en Picardie, capitale du Ponthieu, sur la Somme.",
      "Long. 19d. 29'. 45\". lat. 50d. 7'. 3\".",
      "L'Encyclopédie de Diderot & d'Alembert fut publiée à Paris.",
      "ROME, (Géog.) ancienne ville d'Italie, sur le Tibre, qu'on appelle aujourd'hui la capitale du monde chrétien.",
      "Saint-Denis est à deux lieues au nord de Paris ; c'est là qu'est l'abbaye.",
      "AMIENS (Géog.) ville capitale de Picardie, sur la Somme. Long. 19. 58. lat. 49. 53.",
      "« Il y a, dit-il, quelques rivières » qui se jettent dans l'Océan…",
      "Jean-Jacques Rousseau naquit à Genève en 1712 ; il mourut à Ermenonville.",
  };
  return sample;
}

}  // namespace fsner::testing
