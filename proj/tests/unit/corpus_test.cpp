#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fsner/corpus.hpp"
#include "fsner/error.hpp"
#include "support/test_support.hpp"

namespace fsner {
namespace {

using testing::make_document;

const LabelSet& labels() {
  static const LabelSet set = LabelSet::defaults();
  return set;
}

std::string line_for(const Document& d) { return document_to_json(d).dump() + "\n"; }

TEST(LabelSet, DefaultsHaveSixLabels) {
  const auto names = LabelSet::defaults().names();
  EXPECT_EQ(names, (std::vector<std::string>{"Spatial", "Person", "Misc", "Nominal", "Relation", "Latlong"}));
}

TEST(LabelSet, RejectsInvalidNames) {
  EXPECT_THROW(LabelSet(std::vector<LabelInfo>{{"O", ""}}), CorpusError);
  EXPECT_THROW(LabelSet(std::vector<LabelInfo>{{"", ""}}), CorpusError);
  EXPECT_THROW(LabelSet(std::vector<LabelInfo>{{"New York", ""}}), CorpusError);
  EXPECT_THROW(LabelSet(std::vector<LabelInfo>{{"A", ""}, {"A", ""}}), CorpusError);
}

TEST(LabelSet, JsonAcceptsStringsAndObjects) {
  auto set = label_set_from_json(nlohmann::json::parse(R"({"labels":["A",{"name":"B","description":"bee"}]})"));
  EXPECT_EQ(set.names(), (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(set.description("B"), "bee");
  EXPECT_EQ(label_set_from_json(nlohmann::json::parse(label_set_to_json(set).dump())), set);
}

TEST(LoadCorpus, MinimalDocument) {
  const Document d = make_document("d1", "Paris est belle", {{0, 1, "Spatial"}});
  ASSERT_EQ(d.tokens.size(), 3u);
  const Corpus c = parse_corpus(line_for(d), labels());
  ASSERT_EQ(c.documents.size(), 1u);
  EXPECT_EQ(c.documents[0], d);
}

TEST(LoadCorpus, EmptyFile) {
  EXPECT_TRUE(parse_corpus("", labels()).documents.empty());
  EXPECT_TRUE(parse_corpus("\n  \n", labels()).documents.empty());
}

TEST(LoadCorpus, SpanBeyondTokenCountNamesDocumentAndField) {
  Document d = make_document("doc-7", "Paris est belle");
  d.spans.push_back(GoldSpan{1, 4, "Spatial", 1});
  try {
    parse_corpus(line_for(d), labels());
    FAIL() << "expected CorpusError";
  } catch (const CorpusError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("doc-7"), std::string::npos) << msg;
    EXPECT_NE(msg.find("end_token"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;
  }
}

TEST(LoadCorpus, ReportsEveryBadLine) {
  Document good = make_document("ok", "Paris");
  Document bad_label = make_document("bad", "Paris");
  bad_label.token_labels[0] = "City";
  const std::string content = line_for(good) + "{not json\n" + line_for(bad_label);
  try {
    parse_corpus(content, labels());
    FAIL();
  } catch (const CorpusError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 2"), std::string::npos);
    EXPECT_NE(msg.find("line 3"), std::string::npos);
    EXPECT_NE(msg.find("City"), std::string::npos);
  }
}

TEST(LoadCorpus, RejectsOffsetInconsistency) {
  Document d = make_document("x", "Paris est");
  d.tokens[1].start = 5;
  d.tokens[1].end = 8;
  EXPECT_THROW(parse_corpus(line_for(d), labels()), CorpusError);
}

TEST(LoadCorpus, RejectsLabelLengthMismatch) {
  Document d = make_document("x", "Paris est");
  d.token_labels.pop_back();
  EXPECT_THROW(parse_corpus(line_for(d), labels()), CorpusError);
}

TEST(LoadCorpus, RejectsInconsistentDepthZeroSpan) {
  Document d = make_document("x", "Paris est", {{0, 1, "Spatial"}});
  d.token_labels[0] = "Person";
  EXPECT_THROW(parse_corpus(line_for(d), labels()), CorpusError);
}

TEST(LoadCorpus, RejectsDuplicateIds) {
  Document d = make_document("x", "Paris");
  EXPECT_THROW(parse_corpus(line_for(d) + line_for(d), labels()), CorpusError);
}

TEST(LoadCorpus, MissingFile) { EXPECT_THROW(load_corpus("/nonexistent/c.jsonl", labels()), CorpusError); }

TEST(LoadCorpus, RoundTripIsFixedPoint) {
  Corpus c;
  c.label_set = labels();
  for (std::size_t i = 0; i < testing::french_sample().size(); ++i) {
    c.documents.push_back(make_document("d" + std::to_string(i), testing::french_sample()[i], {{0, 1, "Spatial"}}));
  }
  const std::string once = serialize_corpus(c);
  const Corpus again = parse_corpus(once, labels());
  EXPECT_EQ(serialize_corpus(again), once);
  EXPECT_EQ(again.documents, c.documents);

  const auto path = std::filesystem::temp_directory_path() / "fsner_corpus_roundtrip.jsonl";
  save_corpus(c, path);
  EXPECT_EQ(load_corpus(path, labels()).documents, c.documents);
  std::filesystem::remove(path);
}

TEST(FlattenNested, KeepsOnlyOutermost) {
  const Document d = make_document("n", "a b c d e f", {{0, 5, "Spatial"}, {1, 2, "Person", 1}});
  const Document flat = flatten_nested(d);
  ASSERT_EQ(flat.spans.size(), 1u);
  EXPECT_EQ(flat.spans[0], (GoldSpan{0, 5, "Spatial", 0}));
  EXPECT_EQ(flat.tokens, d.tokens);
  EXPECT_EQ(flat.token_labels, d.token_labels);
  EXPECT_EQ(flat.text, d.text);
}

TEST(FlattenNested, IdentityWithoutNesting) {
  const Document d = make_document("n", "a b c", {{0, 1, "Spatial"}, {2, 3, "Person"}});
  EXPECT_EQ(flatten_nested(d), d);
}

TEST(FlattenNested, OverlappingDepthZeroIsError) {
  Document d = make_document("n", "a b c d e f");
  d.spans = {{0, 3, "Spatial", 0}, {2, 5, "Spatial", 0}};
  EXPECT_THROW(flatten_nested(d), CorpusError);
}

TEST(FlattenNested, Idempotent) {
  testing::TextGenerator gen(3);
  std::uniform_int_distribution<int> depth(0, 2);
  for (int round = 0; round < 200; ++round) {
    Document d = make_document("r", "a b c d e f g h");
    std::size_t pos = 0;
    while (pos + 1 < 8) {
      const std::size_t end = pos + 1 + static_cast<std::size_t>(gen.rng()() % 2);
      d.spans.push_back({pos, end, "Spatial", 0});
      d.spans.push_back({pos, pos + 1, "Person", 1 + depth(gen.rng()) % 2});
      pos = end + 1;
    }
    const Document once = flatten_nested(d);
    EXPECT_EQ(flatten_nested(once), once);
    for (const auto& s : once.spans) EXPECT_EQ(s.depth, 0);
  }
}

Corpus coverage_corpus() {
  Corpus c;
  c.label_set = labels();
  c.documents.push_back(make_document("d1", "Paris Jean", {{0, 1, "Spatial"}, {1, 2, "Person"}}));
  c.documents.push_back(make_document("d2", "a b c d e f",
                                      {{0, 1, "Spatial"}, {1, 2, "Person"}, {2, 3, "Misc"}, {3, 4, "Nominal"},
                                       {4, 5, "Relation"}, {5, 6, "Latlong"}}));
  c.documents.push_back(make_document("d3", "a b c d e f",
                                      {{0, 1, "Spatial"}, {1, 2, "Person"}, {2, 3, "Misc"}, {3, 4, "Nominal"},
                                       {4, 5, "Relation"}, {5, 6, "Latlong"}}));
  return c;
}

// Linear scan written against the raw spans, for comparison.
std::string first_covering(const Corpus& c) {
  for (const auto& d : c.documents) {
    std::size_t found = 0;
    for (const auto& l : c.label_set.names()) {
      for (const auto& s : d.spans) {
        if (s.depth == 0 && s.label == l) {
          ++found;
          break;
        }
      }
    }
    if (found == c.label_set.size()) return d.id;
  }
  return {};
}

TEST(SelectExemplar, FirstFullCoverageDocument) {
  const Corpus c = coverage_corpus();
  EXPECT_EQ(select_exemplar(c).id, "d2");
  EXPECT_EQ(first_covering(c), "d2");
}

TEST(SelectExemplar, SingleLabelPicksFirstDocument) {
  Corpus c;
  c.label_set = LabelSet(std::vector<LabelInfo>{{"Spatial", ""}});
  c.documents.push_back(make_document("a", "Paris", {{0, 1, "Spatial"}}));
  c.documents.push_back(make_document("b", "Lyon", {{0, 1, "Spatial"}}));
  EXPECT_EQ(select_exemplar(c).id, "a");
}

TEST(SelectExemplar, NamesUncoveredLabel) {
  Corpus c = coverage_corpus();
  c.documents.erase(c.documents.begin() + 1, c.documents.end());
  c.documents.push_back(make_document("d4", "a b c d e",
                                      {{0, 1, "Spatial"}, {1, 2, "Person"}, {2, 3, "Misc"}, {3, 4, "Nominal"},
                                       {4, 5, "Relation"}}));
  try {
    select_exemplar(c);
    FAIL();
  } catch (const CorpusError& e) {
    EXPECT_NE(std::string(e.what()).find("Latlong"), std::string::npos) << e.what();
  }
}

TEST(SelectExemplar, NestedSpansDoNotCount) {
  Corpus c;
  c.label_set = LabelSet(std::vector<LabelInfo>{{"Spatial", ""}, {"Person", ""}});
  c.documents.push_back(make_document("a", "a b", {{0, 2, "Spatial"}, {0, 1, "Person", 1}}));
  EXPECT_THROW(select_exemplar(c), CorpusError);
}

TEST(SelectExemplar, OverrideAndEmpty) {
  const Corpus c = coverage_corpus();
  EXPECT_EQ(select_exemplar(c, std::string("d1")).id, "d1");
  EXPECT_THROW(select_exemplar(c, std::string("zzz")), CorpusError);
  Corpus empty;
  empty.label_set = labels();
  EXPECT_THROW(select_exemplar(empty), CorpusError);
}

TEST(SelectExemplar, OutputCoversEveryLabel) {
  const Corpus c = coverage_corpus();
  const Document& ex = select_exemplar(c);
  for (const auto& l : c.label_set.names()) {
    EXPECT_TRUE(std::any_of(ex.spans.begin(), ex.spans.end(), [&](const GoldSpan& s) { return s.label == l; }));
  }
}

TEST(Import, BioTagsWithBareTokens) {
  ImportProfile p;
  p.tokens_field = "words";
  p.labels_field = "tags";
  p.bio_labels = true;
  p.label_map = {{"NP-Spatial", "Spatial"}, {"Date", "O"}};
  const std::string line =
      R"({"id": 3, "text": "Paris et Saint Denis en 1750", "words": ["Paris","et","Saint","Denis","en","1750"],)"
      R"( "tags": ["B-NP-Spatial","O","B-NP-Spatial","I-NP-Spatial","O","B-Date"]})";
  const Corpus c = import_corpus(line, p, labels());
  ASSERT_EQ(c.documents.size(), 1u);
  const Document& d = c.documents[0];
  EXPECT_EQ(d.id, "3");
  EXPECT_EQ(d.tokens[2].start, 9u);
  EXPECT_EQ(d.token_labels, (std::vector<std::string>{"Spatial", "O", "Spatial", "Spatial", "O", "O"}));
  ASSERT_EQ(d.spans.size(), 2u);
  EXPECT_EQ(d.spans[1], (GoldSpan{2, 4, "Spatial", 0}));
}

TEST(Import, AdjacentBeginTagsStartNewSpans) {
  ImportProfile p;
  p.bio_labels = true;
  const std::string line =
      R"({"id": "a", "tokens": ["Lyon","Paris"], "token_labels": ["B-Spatial","B-Spatial"]})";
  const Corpus c = import_corpus(line, p, labels());
  EXPECT_EQ(c.documents[0].text, "Lyon Paris");
  EXPECT_EQ(c.documents[0].spans.size(), 2u);
}

TEST(Import, TokenNotInTextIsError) {
  ImportProfile p;
  const std::string line = R"({"id": "a", "text": "Lyon", "tokens": ["Paris"], "token_labels": ["O"]})";
  EXPECT_THROW(import_corpus(line, p, labels()), CorpusError);
}

}  // namespace
}  // namespace fsner
