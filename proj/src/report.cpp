#include "fsner/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "fsner/error.hpp"

namespace fsner {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

double round_half_up(double value, int digits) {
  const double scale = std::pow(10.0, digits);
  return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

std::string format_rate(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", round_half_up(value, 2));
  return buf;
}

namespace {

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, end) : std::to_string(v);
}

ordered_json counts_json(const CountTriple& c) { return ordered_json{{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}}; }

CountTriple counts_from(const json& j) {
  return CountTriple{j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(), j.at("fn").get<std::size_t>()};
}

ordered_json rates_json(const Rates& r) {
  return ordered_json{{"precision", r.precision},
                      {"recall", r.recall},
                      {"f1", r.f1},
                      {"no_predictions", r.no_predictions},
                      {"no_gold", r.no_gold}};
}

double ratio(std::size_t num, std::size_t den) {
  return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

}  // namespace

ordered_json report_to_json(const EvalReport& r) {
  ordered_json per_label = ordered_json::object();
  for (const auto& [label, m] : r.per_label) {
    ordered_json entry = counts_json(m.counts);
    entry["support"] = m.support;
    entry["precision"] = m.rates.precision;
    entry["recall"] = m.rates.recall;
    entry["f1"] = m.rates.f1;
    per_label[label] = std::move(entry);
  }
  ordered_json j{{"model", r.model},
                 {"granularity", to_string(r.granularity)},
                 {"repair_mode", to_string(r.repair_mode)},
                 {"include_outside", r.include_outside},
                 {"documents", r.documents},
                 {"failed_documents", r.failed_documents},
                 {"counts", counts_json(r.counts)},
                 {"micro", rates_json(r.micro)},
                 {"macro_f1", r.macro_f1},
                 {"per_label", std::move(per_label)}};
  if (r.granularity == Granularity::span_level) {
    const auto& o = r.span_outcomes;
    const std::size_t predicted = o.predicted();
    j["span_outcomes"] = ordered_json{
        {"correct", o.correct},
        {"partial", o.partial},
        {"incorrect", o.incorrect},
        {"missed", o.missed},
        {"predicted", predicted},
        {"gold", r.gold_spans},
        {"share_of_predicted", {{"correct", ratio(o.correct, predicted)}, {"partial", ratio(o.partial, predicted)}}},
        {"share_of_gold", {{"correct", ratio(o.correct, r.gold_spans)}, {"partial", ratio(o.partial, r.gold_spans)}}}};
  }
  j["diagnostics"] = r.diagnostics.to_json();
  return j;
}

EvalReport report_from_json(const json& j) {
  try {
    EvalReport r;
    r.model = j.value("model", std::string{});
    r.granularity = granularity_from_string(j.at("granularity").get<std::string>());
    r.repair_mode = repair_mode_from_string(j.at("repair_mode").get<std::string>());
    r.include_outside = j.value("include_outside", false);
    r.documents = j.value("documents", std::size_t{0});
    r.failed_documents = j.value("failed_documents", std::size_t{0});
    r.counts = counts_from(j.at("counts"));
    r.micro = rates(r.counts);
    r.macro_f1 = j.value("macro_f1", 0.0);
    for (const auto& [label, entry] : j.at("per_label").items()) {
      LabelMetrics m;
      m.counts = counts_from(entry);
      m.rates = rates(m.counts);
      m.support = m.counts.tp + m.counts.fn;
      r.per_label[label] = m;
    }
    if (j.contains("span_outcomes")) {
      const auto& o = j["span_outcomes"];
      r.span_outcomes = SpanOutcomeCounts{o.at("correct").get<std::size_t>(), o.at("partial").get<std::size_t>(),
                                          o.at("incorrect").get<std::size_t>(), o.at("missed").get<std::size_t>()};
      r.gold_spans = o.value("gold", std::size_t{0});
    }
    if (j.contains("diagnostics")) r.diagnostics = Diagnostics::from_json(j["diagnostics"]);
    return r;
  } catch (const json::exception& e) {
    throw EvalError(std::string("report: ") + e.what());
  }
}

ScoreRow score_row(const EvalReport& report) {
  std::string name = report.model.empty() ? "unnamed" : report.model;
  name += " [" + std::string(to_string(report.repair_mode)) + "]";
  return ScoreRow{std::move(name), report.micro.precision, report.micro.recall, report.micro.f1};
}

std::string render_table(const std::vector<ScoreRow>& rows, bool with_reference) {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.model.size());
  if (with_reference) {
    for (const auto& r : kReferenceScores) width = std::max(width, r.model.size());
  }
  auto line = [&](const std::string& model, const std::string& p, const std::string& r, const std::string& f) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%-*s  %9s  %9s  %9s\n", static_cast<int>(width), model.c_str(), p.c_str(),
                  r.c_str(), f.c_str());
    return std::string(buf);
  };
  const std::string rule(width + 2 + 9 * 3 + 4, '-');
  std::string out = line("Model", "Precision", "Recall", "F1") + rule + "\n";
  for (const auto& r : rows) out += line(r.model, format_rate(r.precision), format_rate(r.recall), format_rate(r.f1));
  if (with_reference) {
    out += rule + "\n";
    for (const auto& r : kReferenceScores) {
      out += line(r.model, format_rate(r.precision), format_rate(r.recall), format_rate(r.f1));
    }
  }
  return out;
}

std::string render_csv(const std::vector<ScoreRow>& rows) {
  std::string out = "model,precision,recall,f1\n";
  for (const auto& r : rows) {
    std::string model = r.model;
    if (model.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : model) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
      model = quoted + "\"";
    }
    out += model + "," + shortest(r.precision) + "," + shortest(r.recall) + "," + shortest(r.f1) + "\n";
  }
  return out;
}

std::string render_details(const EvalReport& r) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s | %s | %s | documents %zu (failed %zu)\n", r.model.c_str(),
                std::string(to_string(r.granularity)).c_str(), std::string(to_string(r.repair_mode)).c_str(),
                r.documents, r.failed_documents);
  out += buf;
  std::snprintf(buf, sizeof buf, "micro  P %s  R %s  F1 %s  (tp %zu fp %zu fn %zu)  macro F1 %s\n",
                format_rate(r.micro.precision).c_str(), format_rate(r.micro.recall).c_str(),
                format_rate(r.micro.f1).c_str(), r.counts.tp, r.counts.fp, r.counts.fn,
                format_rate(r.macro_f1).c_str());
  out += buf;
  if (r.micro.no_predictions) out += "note: no predictions; precision reported as 0\n";
  for (const auto& [label, m] : r.per_label) {
    std::snprintf(buf, sizeof buf, "  %-12s P %s  R %s  F1 %s  support %zu\n", label.c_str(),
                  format_rate(m.rates.precision).c_str(), format_rate(m.rates.recall).c_str(),
                  format_rate(m.rates.f1).c_str(), m.support);
    out += buf;
  }
  if (r.granularity == Granularity::span_level) {
    const auto& o = r.span_outcomes;
    std::snprintf(buf, sizeof buf,
                  "spans  correct %zu  partial %zu  incorrect %zu  missed %zu  (predicted %zu, gold %zu)\n",
                  o.correct, o.partial, o.incorrect, o.missed, o.predicted(), r.gold_spans);
    out += buf;
  }
  return out;
}

}  // namespace fsner
