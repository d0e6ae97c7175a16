#include <gtest/gtest.h>

#include <cmath>

#include "fsner/error.hpp"
#include "fsner/evaluator.hpp"
#include "fsner/report.hpp"
#include "support/metric_oracle.hpp"
#include "support/test_support.hpp"

namespace fsner {
namespace {

using testing::make_document;
using V = std::vector<std::string>;

PredictedSpan pspan(std::size_t b, std::size_t e, std::string label) {
  return PredictedSpan{b, e, 0, 0, "", std::move(label), Grounding::verbatim};
}

TEST(F1, Examples) {
  EXPECT_NEAR(f1(0.81, 0.36), 0.498461538, 1e-8);
  EXPECT_EQ(format_rate(f1(0.81, 0.36)), "0.50");
  EXPECT_NEAR(f1(0.68, 0.72), 0.699428571, 1e-8);
  EXPECT_EQ(format_rate(f1(0.68, 0.72)), "0.70");
  EXPECT_EQ(f1(0.0, 0.0), 0.0);
  EXPECT_EQ(f1(1.0, 0.0), 0.0);
}

TEST(F1, PublishedRowsAreConsistent) {
  for (const auto& row : kReferenceScores) {
    EXPECT_NEAR(round_half_up(f1(row.precision, row.recall)), row.f1, 0.01 + 1e-12) << row.model;
  }
  EXPECT_EQ(round_half_up(f1(0.93, 0.94)), 0.93);
}

TEST(F1, Symmetric) {
  for (int p = 0; p <= 20; ++p) {
    for (int r = 0; r <= 20; ++r) EXPECT_EQ(f1(p / 20.0, r / 20.0), f1(r / 20.0, p / 20.0));
  }
}

TEST(Rates, EmptyDenominators) {
  const Rates r = rates(CountTriple{0, 0, 3});
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_TRUE(r.no_predictions);
  EXPECT_FALSE(r.no_gold);
  EXPECT_EQ(r.f1, 0.0);
  EXPECT_TRUE(rates(CountTriple{}).no_gold);
}

TEST(EvalTokens, Examples) {
  auto t = eval_tokens(V{"Spatial", "O", "Person"}, V{"Spatial", "Person", "O"});
  EXPECT_EQ(t.counts, (CountTriple{1, 1, 1}));
  const Rates r = rates(t.counts);
  EXPECT_DOUBLE_EQ(r.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
  EXPECT_DOUBLE_EQ(r.f1, 0.5);

  const V gold{"Spatial", "O", "Person", "Person"};
  const Rates perfect = rates(eval_tokens(gold, gold).counts);
  EXPECT_EQ(perfect.precision, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);
  EXPECT_EQ(perfect.f1, 1.0);

  const Rates none = rates(eval_tokens(V{"Spatial", "Misc", "Person"}, V{"O", "O", "O"}).counts);
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_TRUE(none.no_predictions);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f1, 0.0);
}

TEST(EvalTokens, LabelSwapCountsBoth) {
  const auto t = eval_tokens(V{"Spatial"}, V{"Person"});
  EXPECT_EQ(t.counts, (CountTriple{0, 1, 1}));
  EXPECT_EQ(t.per_label.at("Person"), (CountTriple{0, 1, 0}));
  EXPECT_EQ(t.per_label.at("Spatial"), (CountTriple{0, 0, 1}));
}

TEST(EvalTokens, IncludeOutside) {
  const auto t = eval_tokens(V{"O", "O", "Spatial"}, V{"O", "Spatial", "Spatial"}, true);
  EXPECT_EQ(t.counts, (CountTriple{2, 1, 1}));
}

TEST(EvalTokens, LengthMismatch) { EXPECT_THROW(eval_tokens(V{"O"}, V{}), EvalError); }

TEST(EvalSpans, Examples) {
  const std::vector<GoldSpan> gold{{3, 6, "Spatial", 0}};
  auto s = eval_spans(gold, std::vector{pspan(3, 6, "Spatial")});
  EXPECT_EQ(s.outcomes, (SpanOutcomeCounts{1, 0, 0, 0}));
  EXPECT_EQ(rates(s.counts).f1, 1.0);

  s = eval_spans(gold, std::vector{pspan(3, 5, "Spatial")});
  EXPECT_EQ(s.outcomes, (SpanOutcomeCounts{0, 1, 0, 0}));
  EXPECT_EQ(rates(s.counts).precision, 0.0);
  EXPECT_EQ(rates(s.counts).recall, 0.0);

  s = eval_spans(gold, std::vector{pspan(3, 6, "Person")});
  EXPECT_EQ(s.outcomes, (SpanOutcomeCounts{0, 0, 1, 1}));
  EXPECT_EQ(s.counts, (CountTriple{0, 1, 1}));
}

TEST(EvalSpans, OrderIndependent) {
  const std::vector<GoldSpan> gold{{0, 1, "Spatial", 0}, {2, 4, "Person", 0}};
  const auto a = eval_spans(gold, std::vector{pspan(2, 4, "Person"), pspan(0, 1, "Spatial")});
  EXPECT_EQ(a.counts, (CountTriple{2, 0, 0}));
}

TEST(Aggregate, SumsThenDivides) {
  DocumentEval a, b;
  a.document_id = "a";
  a.counts = {1, 0, 1};
  b.document_id = "b";
  b.counts = {1, 1, 0};
  const std::vector docs{a, b};
  const EvalReport r = aggregate(docs);
  EXPECT_EQ(r.counts, (CountTriple{2, 1, 1}));
  EXPECT_DOUBLE_EQ(r.micro.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.micro.recall, 2.0 / 3.0);
  EXPECT_EQ(r.documents, 2u);
}

TEST(Aggregate, Singleton) {
  DocumentEval a;
  a.counts = {3, 1, 2};
  const EvalReport r = aggregate(std::vector{a});
  const Rates direct = rates(a.counts);
  EXPECT_EQ(r.micro.precision, direct.precision);
  EXPECT_EQ(r.micro.recall, direct.recall);
  EXPECT_EQ(r.micro.f1, direct.f1);
}

TEST(Aggregate, MicroDiffersFromDocumentAverage) {
  DocumentEval big, small;
  big.counts = {90, 10, 0};
  small.counts = {0, 1, 1};
  const EvalReport r = aggregate(std::vector{big, small});
  const double average = (rates(big.counts).f1 + rates(small.counts).f1) / 2.0;
  EXPECT_DOUBLE_EQ(r.micro.f1, f1(90.0 / 101.0, 90.0 / 91.0));
  EXPECT_GT(std::abs(r.micro.f1 - average), 0.3);
}

TEST(Aggregate, MixedGranularityOrMode) {
  DocumentEval a, b;
  b.granularity = Granularity::token_level;
  EXPECT_THROW(aggregate(std::vector{a, b}), EvalError);
  DocumentEval c;
  c.repair_mode = RepairMode::strict_only;
  EXPECT_THROW(aggregate(std::vector{a, c}), EvalError);
}

TEST(Aggregate, SeededLabelsAppear) {
  const EvalReport r = aggregate(std::vector<DocumentEval>{}, {"Spatial", "Person"});
  EXPECT_EQ(r.per_label.size(), 2u);
  EXPECT_EQ(r.macro_f1, 0.0);
  EXPECT_TRUE(r.micro.no_gold);
}

TEST(EvaluateDocument, RepairModesDiffer) {
  const Document gold = make_document("p", "Paris, ville de France.", {{0, 1, "Spatial"}, {4, 5, "Spatial"}});
  PredictionSet pred;
  pred.document_id = "p";
  pred.spans = {PredictedSpan{0, 1, 0, 5, "Paris", "Spatial", Grounding::verbatim},
                PredictedSpan{4, 5, 16, 22, "France", "Spatial", Grounding::re_grounded},
                PredictedSpan{2, 3, 7, 12, "ville", "Spatial", Grounding::rejected}};
  const auto strict = evaluate_document(gold, pred, {RepairMode::strict_only, false});
  const auto repaired = evaluate_document(gold, pred, {RepairMode::with_regrounded, false});
  EXPECT_EQ(strict.counts, (CountTriple{1, 0, 1}));
  EXPECT_EQ(repaired.counts, (CountTriple{2, 0, 0}));
}

TEST(EvaluateDocument, FailedScoresAsEmpty) {
  const Document gold = make_document("p", "Paris", {{0, 1, "Spatial"}});
  PredictionSet pred;
  pred.document_id = "p";
  pred.failure = "timeout";
  const auto e = evaluate_document(gold, pred);
  EXPECT_TRUE(e.failed);
  EXPECT_EQ(e.counts, (CountTriple{0, 0, 1}));
  pred.document_id = "q";
  EXPECT_THROW(evaluate_document(gold, pred), EvalError);
}

TEST(EvaluateDocument, NestedGoldIsFlattened) {
  const Document gold = make_document("n", "ville de Paris", {{0, 3, "Spatial"}, {2, 3, "Spatial", 1}});
  PredictionSet pred;
  pred.document_id = "n";
  pred.spans = {PredictedSpan{0, 3, 0, 14, "ville de Paris", "Spatial", Grounding::verbatim}};
  EXPECT_EQ(evaluate_document(gold, pred).counts, (CountTriple{1, 0, 0}));
}

void expect_matches_oracle(const TokenEval& t, const testing::OracleCounts& o) {
  EXPECT_EQ(t.counts, (CountTriple{o.tp, o.fp, o.fn}));
  for (const auto& [label, c] : o.per_label) {
    const CountTriple expected{std::get<0>(c), std::get<1>(c), std::get<2>(c)};
    const auto it = t.per_label.find(label);
    EXPECT_EQ(it == t.per_label.end() ? CountTriple{} : it->second, expected) << label;
  }
}

TEST(Properties, TokensMatchOracle) {
  std::mt19937_64 rng(101);
  for (int i = 0; i < 2000; ++i) {
    const auto m = testing::random_instance(rng);
    for (bool outside : {false, true}) {
      expect_matches_oracle(eval_tokens(m.gold_labels, m.pred_labels, outside),
                            testing::oracle_tokens(m.gold_labels, m.pred_labels, outside));
    }
  }
}

TEST(Properties, SpansMatchOracle) {
  std::mt19937_64 rng(202);
  for (int i = 0; i < 2000; ++i) {
    const auto m = testing::random_instance(rng);
    const auto s = eval_spans(m.gold_spans, m.pred_spans);
    const auto o = testing::oracle_spans(m.gold_spans, m.pred_spans);
    ASSERT_EQ(s.counts, (CountTriple{o.tp, o.fp, o.fn})) << "instance " << i;
    ASSERT_EQ(s.outcomes, (SpanOutcomeCounts{o.correct, o.partial, o.incorrect, o.missed})) << "instance " << i;
    EXPECT_EQ(s.outcomes.predicted(), m.pred_spans.size());
  }
}

TEST(Properties, TokenSymmetry) {
  std::mt19937_64 rng(303);
  for (int i = 0; i < 1000; ++i) {
    const auto m = testing::random_instance(rng);
    const Rates ab = rates(eval_tokens(m.gold_labels, m.pred_labels).counts);
    const Rates ba = rates(eval_tokens(m.pred_labels, m.gold_labels).counts);
    EXPECT_EQ(ab.precision, ba.recall);
    EXPECT_EQ(ab.recall, ba.precision);
  }
}

TEST(Properties, Monotonicity) {
  std::mt19937_64 rng(404);
  for (int i = 0; i < 1000; ++i) {
    auto m = testing::random_instance(rng);
    const auto before = eval_spans(m.gold_spans, m.pred_spans).counts;
    // A span past every token can match nothing.
    auto spurious = m.pred_spans;
    spurious.push_back(pspan(m.tokens + 1, m.tokens + 2, "Spatial"));
    const auto after_spurious = eval_spans(m.gold_spans, spurious).counts;
    EXPECT_EQ(after_spurious.fp, before.fp + 1);
    EXPECT_EQ(after_spurious.tp, before.tp);
    for (const auto& g : m.gold_spans) {
      const bool present = std::any_of(m.pred_spans.begin(), m.pred_spans.end(), [&](const PredictedSpan& p) {
        return p.start_token == g.start_token && p.end_token == g.end_token && p.label == g.label;
      });
      if (present) continue;
      auto exact = m.pred_spans;
      exact.push_back(pspan(g.start_token, g.end_token, g.label));
      EXPECT_GE(eval_spans(m.gold_spans, exact).counts.tp, before.tp + 1);
      break;
    }
  }
}

}  // namespace
}  // namespace fsner
