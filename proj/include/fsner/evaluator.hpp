#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fsner/corpus.hpp"
#include "fsner/outparse.hpp"

namespace fsner {

/// Micro-average accumulator; additive over documents.
struct CountTriple {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  CountTriple& operator+=(const CountTriple& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const CountTriple&, const CountTriple&) = default;
};

/// Precision/recall/F1 from counts. A rate with an empty denominator is
/// reported as 0 and flagged.
struct Rates {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool no_predictions = false;
  bool no_gold = false;
};

/// Harmonic mean; 0 when p + r == 0.
double f1(double precision, double recall);
Rates rates(const CountTriple& c);

/// Span outcome taxonomy. correct + partial + incorrect == predicted spans.
struct SpanOutcomeCounts {
  std::size_t correct = 0;
  std::size_t partial = 0;    // overlaps a same-label gold span, boundaries differ
  std::size_t incorrect = 0;
  std::size_t missed = 0;     // gold spans with neither a correct nor a partial match

  std::size_t predicted() const { return correct + partial + incorrect; }
  SpanOutcomeCounts& operator+=(const SpanOutcomeCounts& o) {
    correct += o.correct;
    partial += o.partial;
    incorrect += o.incorrect;
    missed += o.missed;
    return *this;
  }
  friend bool operator==(const SpanOutcomeCounts&, const SpanOutcomeCounts&) = default;
};

using LabelCounts = std::map<std::string, CountTriple>;

struct TokenEval {
  CountTriple counts;
  LabelCounts per_label;
};

/// Per-token strict comparison. With include_outside, "O" is scored like any
/// other label. Throws EvalError when the sequences differ in length.
TokenEval eval_tokens(std::span<const std::string> gold, std::span<const std::string> predicted,
                      bool include_outside = false);

struct SpanEval {
  CountTriple counts;
  LabelCounts per_label;
  SpanOutcomeCounts outcomes;
};

/// Exact (interval, label) matching, greedy in document order, each gold span
/// used at most once. Gold spans must not overlap.
SpanEval eval_spans(std::span<const GoldSpan> gold, std::span<const PredictedSpan> predicted);

struct EvalOptions {
  RepairMode repair_mode = RepairMode::with_regrounded;
  bool include_outside = false;
};

struct DocumentEval {
  std::string document_id;
  Granularity granularity = Granularity::span_level;
  RepairMode repair_mode = RepairMode::with_regrounded;
  CountTriple counts;
  LabelCounts per_label;
  SpanOutcomeCounts outcomes;
  std::size_t gold_spans = 0;
  Diagnostics diagnostics;
  bool failed = false;
};

/// Scores one prediction set against its gold document (nested spans are
/// flattened first). A failed prediction scores as an empty answer.
DocumentEval evaluate_document(const Document& gold, const PredictionSet& pred, const EvalOptions& options = {});

struct LabelMetrics {
  CountTriple counts;
  Rates rates;
  std::size_t support = 0;  // tp + fn
};

struct EvalReport {
  std::string model;
  Granularity granularity = Granularity::span_level;
  RepairMode repair_mode = RepairMode::with_regrounded;
  bool include_outside = false;
  std::size_t documents = 0;
  std::size_t failed_documents = 0;
  CountTriple counts;
  Rates micro;
  double macro_f1 = 0.0;  // secondary column
  std::map<std::string, LabelMetrics> per_label;
  SpanOutcomeCounts span_outcomes;
  std::size_t gold_spans = 0;
  Diagnostics diagnostics;
};

/// Micro-averaged corpus report: counts are summed first, rates computed
/// once. `labels` pre-seeds per-label rows so unseen labels still appear.
/// Throws EvalError on mixed granularities or repair modes.
EvalReport aggregate(std::span<const DocumentEval> documents, const std::vector<std::string>& labels = {},
                     std::string model = {});

}  // namespace fsner
