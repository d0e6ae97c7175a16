#include "fsner/evaluator.hpp"

#include <algorithm>
#include <tuple>

#include "fsner/error.hpp"

namespace fsner {

double f1(double precision, double recall) {
  const double sum = precision + recall;
  return sum == 0.0 ? 0.0 : 2.0 * precision * recall / sum;
}

Rates rates(const CountTriple& c) {
  Rates r;
  const std::size_t predicted = c.tp + c.fp;
  const std::size_t gold = c.tp + c.fn;
  r.no_predictions = predicted == 0;
  r.no_gold = gold == 0;
  r.precision = predicted ? static_cast<double>(c.tp) / static_cast<double>(predicted) : 0.0;
  r.recall = gold ? static_cast<double>(c.tp) / static_cast<double>(gold) : 0.0;
  r.f1 = f1(r.precision, r.recall);
  return r;
}

TokenEval eval_tokens(std::span<const std::string> gold, std::span<const std::string> predicted,
                      bool include_outside) {
  if (gold.size() != predicted.size()) {
    throw EvalError("eval_tokens: " + std::to_string(gold.size()) + " gold labels but " +
                    std::to_string(predicted.size()) + " predicted labels");
  }
  TokenEval out;
  auto scored = [&](const std::string& l) { return include_outside || l != kOutsideLabel; };
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const std::string& g = gold[i];
    const std::string& p = predicted[i];
    if (g == p) {
      if (scored(g)) {
        ++out.counts.tp;
        ++out.per_label[g].tp;
      }
      continue;
    }
    if (scored(p)) {
      ++out.counts.fp;
      ++out.per_label[p].fp;
    }
    if (scored(g)) {
      ++out.counts.fn;
      ++out.per_label[g].fn;
    }
  }
  return out;
}

SpanEval eval_spans(std::span<const GoldSpan> gold, std::span<const PredictedSpan> predicted) {
  std::vector<const GoldSpan*> golds;
  for (const auto& g : gold) golds.push_back(&g);
  std::stable_sort(golds.begin(), golds.end(), [](const GoldSpan* a, const GoldSpan* b) {
    return std::tie(a->start_token, a->end_token) < std::tie(b->start_token, b->end_token);
  });
  std::vector<const PredictedSpan*> preds;
  for (const auto& p : predicted) preds.push_back(&p);
  std::stable_sort(preds.begin(), preds.end(), [](const PredictedSpan* a, const PredictedSpan* b) {
    return std::tie(a->start_token, a->end_token) < std::tie(b->start_token, b->end_token);
  });

  SpanEval out;
  std::vector<bool> gold_exact(golds.size(), false);
  std::vector<bool> gold_partial(golds.size(), false);
  std::vector<bool> pred_exact(preds.size(), false);

  for (std::size_t p = 0; p < preds.size(); ++p) {
    for (std::size_t g = 0; g < golds.size(); ++g) {
      if (gold_exact[g]) continue;
      if (golds[g]->start_token == preds[p]->start_token && golds[g]->end_token == preds[p]->end_token &&
          golds[g]->label == preds[p]->label) {
        gold_exact[g] = true;
        pred_exact[p] = true;
        break;
      }
    }
  }

  for (std::size_t p = 0; p < preds.size(); ++p) {
    const PredictedSpan& pred = *preds[p];
    if (pred_exact[p]) {
      ++out.counts.tp;
      ++out.per_label[pred.label].tp;
      ++out.outcomes.correct;
      continue;
    }
    ++out.counts.fp;
    ++out.per_label[pred.label].fp;
    bool partial = false;
    for (std::size_t g = 0; g < golds.size(); ++g) {
      const GoldSpan& gs = *golds[g];
      if (gs.label == pred.label && gs.start_token < pred.end_token && pred.start_token < gs.end_token) {
        partial = true;
        gold_partial[g] = true;
      }
    }
    if (partial) {
      ++out.outcomes.partial;
    } else {
      ++out.outcomes.incorrect;
    }
  }
  for (std::size_t g = 0; g < golds.size(); ++g) {
    if (gold_exact[g]) continue;
    ++out.counts.fn;
    ++out.per_label[golds[g]->label].fn;
    if (!gold_partial[g]) ++out.outcomes.missed;
  }
  return out;
}

DocumentEval evaluate_document(const Document& gold, const PredictionSet& pred, const EvalOptions& options) {
  if (pred.document_id != gold.id) {
    throw EvalError("evaluate: prediction for \"" + pred.document_id + "\" scored against \"" + gold.id + "\"");
  }
  const Document flat = flatten_nested(gold);
  DocumentEval out;
  out.document_id = gold.id;
  out.granularity = pred.granularity;
  out.repair_mode = options.repair_mode;
  out.failed = pred.failure.has_value();
  out.diagnostics = pred.diagnostics();
  out.gold_spans = flat.spans.size();

  if (pred.granularity == Granularity::token_level) {
    const auto labels = pred.token_labels(flat.tokens.size(), options.repair_mode);
    TokenEval t = eval_tokens(flat.token_labels, labels, options.include_outside);
    out.counts = t.counts;
    out.per_label = std::move(t.per_label);
  } else {
    const auto spans = pred.accepted_spans(options.repair_mode);
    SpanEval s = eval_spans(flat.spans, spans);
    out.counts = s.counts;
    out.per_label = std::move(s.per_label);
    out.outcomes = s.outcomes;
  }
  return out;
}

EvalReport aggregate(std::span<const DocumentEval> documents, const std::vector<std::string>& labels,
                     std::string model) {
  EvalReport report;
  report.model = std::move(model);
  for (const auto& l : labels) report.per_label[l];
  for (std::size_t i = 0; i < documents.size(); ++i) {
    const DocumentEval& d = documents[i];
    if (i == 0) {
      report.granularity = d.granularity;
      report.repair_mode = d.repair_mode;
    } else if (d.granularity != report.granularity) {
      throw EvalError("aggregate: mixed granularities (" + std::string(to_string(report.granularity)) + " and " +
                      std::string(to_string(d.granularity)) + ")");
    } else if (d.repair_mode != report.repair_mode) {
      throw EvalError("aggregate: mixed repair modes");
    }
    ++report.documents;
    if (d.failed) ++report.failed_documents;
    report.counts += d.counts;
    for (const auto& [label, c] : d.per_label) report.per_label[label].counts += c;
    report.span_outcomes += d.outcomes;
    report.gold_spans += d.gold_spans;
    report.diagnostics += d.diagnostics;
  }
  report.micro = rates(report.counts);
  double macro = 0.0;
  std::size_t macro_n = 0;
  for (auto& [label, m] : report.per_label) {
    m.rates = rates(m.counts);
    m.support = m.counts.tp + m.counts.fn;
    if (m.counts.tp + m.counts.fp + m.counts.fn > 0) {
      macro += m.rates.f1;
      ++macro_n;
    }
  }
  report.macro_f1 = macro_n ? macro / static_cast<double>(macro_n) : 0.0;
  return report;
}

}  // namespace fsner
