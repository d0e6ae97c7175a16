// Acceptance criteria runner. Prints one PASS/FAIL line per criterion with
// its wall time and limit; exits non-zero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "fsner/cli.hpp"
#include "fsner/evaluator.hpp"
#include "fsner/outparse.hpp"
#include "fsner/promptgen.hpp"
#include "fsner/report.hpp"
#include "fsner/tokenizer.hpp"
#include "fsner/unicode.hpp"
#include "support/metric_oracle.hpp"
#include "support/test_support.hpp"

namespace fs = std::filesystem;
using namespace fsner;
using json = nlohmann::json;

namespace {

const fs::path kData = FSNER_TEST_DATA_DIR;

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int failures = 0;

void criterion(const std::string& name, double limit_ms, const std::function<void(Check&)>& body) {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.ok = false;
    c.detail = std::string("exception: ") + e.what();
  }
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (c.ok && ms >= limit_ms) {
    c.ok = false;
    c.detail = "too slow";
  }
  if (!c.ok) ++failures;
  std::printf("%s  %-34s %10.3f ms (limit %g ms)%s%s\n", c.ok ? "PASS" : "FAIL", name.c_str(), ms, limit_ms,
              c.detail.empty() ? "" : "  ", c.detail.c_str());
  std::fflush(stdout);
}

// Published precision/recall pairs and the F1 printed beside them.
void table_arithmetic(Check& c) {
  struct Row {
    double p, r, printed, tolerance;
  };
  const Row rows[] = {{0.81, 0.36, 0.50, 0.0}, {0.75, 0.62, 0.67, 0.01}, {0.68, 0.72, 0.70, 0.0}, {0.93, 0.94, 0.93, 0.0}};
  for (const auto& row : rows) {
    const double got = round_half_up(f1(row.p, row.r));
    c.require(std::abs(got - row.printed) <= row.tolerance + 1e-9,
              "f1(" + std::to_string(row.p) + ", " + std::to_string(row.r) + ") rounds to " + format_rate(got));
  }
  for (std::size_t i = 0; i < kReferenceScores.size(); ++i) {
    c.require(kReferenceScores[i].precision == rows[i].p && kReferenceScores[i].recall == rows[i].r &&
                  kReferenceScores[i].f1 == rows[i].printed,
              "reference row " + kReferenceScores[i].model + " differs");
  }
}

void metric_oracle(Check& c) {
  std::mt19937_64 rng(20240601);
  for (int i = 0; i < 1000; ++i) {
    const auto m = testing::random_instance(rng);
    for (bool outside : {false, true}) {
      const TokenEval t = eval_tokens(m.gold_labels, m.pred_labels, outside);
      const auto o = testing::oracle_tokens(m.gold_labels, m.pred_labels, outside);
      c.require(t.counts == (CountTriple{o.tp, o.fp, o.fn}), "token counts differ on instance " + std::to_string(i));
      for (const auto& [label, triple] : o.per_label) {
        const auto it = t.per_label.find(label);
        const CountTriple got = it == t.per_label.end() ? CountTriple{} : it->second;
        c.require(got == (CountTriple{std::get<0>(triple), std::get<1>(triple), std::get<2>(triple)}),
                  "token per-label counts differ on instance " + std::to_string(i));
      }
    }
    const SpanEval s = eval_spans(m.gold_spans, m.pred_spans);
    const auto o = testing::oracle_spans(m.gold_spans, m.pred_spans);
    c.require(s.counts == (CountTriple{o.tp, o.fp, o.fn}), "span counts differ on instance " + std::to_string(i));
    c.require(s.outcomes == (SpanOutcomeCounts{o.correct, o.partial, o.incorrect, o.missed}),
              "span outcomes differ on instance " + std::to_string(i));
    for (const auto& [label, triple] : o.per_label) {
      const auto it = s.per_label.find(label);
      const CountTriple got = it == s.per_label.end() ? CountTriple{} : it->second;
      c.require(got == (CountTriple{std::get<0>(triple), std::get<1>(triple), std::get<2>(triple)}),
                "span per-label counts differ on instance " + std::to_string(i));
    }
  }
}

void tokenizer_invariants_on(Check& c, const std::string& text) {
  const auto u = unicode::decode(text);
  const auto tokens = tokenize(text);
  std::u32string joined, non_space;
  for (char32_t cp : u) {
    if (!unicode::is_space(cp)) non_space.push_back(cp);
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    c.require(t.index == i, "index");
    c.require(t.start < t.end && t.end <= u.size(), "bounds");
    if (i > 0) c.require(tokens[i - 1].end <= t.start, "monotonicity");
    const std::u32string_view piece = std::u32string_view(u).substr(t.start, t.end - t.start);
    c.require(unicode::encode(piece) == t.text, "substring equality");
    for (char32_t cp : piece) c.require(!unicode::is_space(cp), "whitespace inside a token");
    joined += piece;
    for (std::size_t j = i + 1; j <= std::min(tokens.size(), i + 4); ++j) {
      const CharSpan ext = token_extent(tokens, TokenSpan{i, j});
      const auto back = align_span(tokens, u.size(), ext.begin, ext.end);
      c.require(back && *back == (TokenSpan{i, j}), "align_span inverse");
    }
  }
  c.require(joined == non_space, "reconstruction");
}

void tokenizer_invariants(Check& c) {
  testing::TextGenerator gen(777);
  for (int i = 0; i < 10000 && c.ok; ++i) tokenizer_invariants_on(c, gen.next(60));
  for (const auto& s : testing::french_sample()) tokenizer_invariants_on(c, s);
}

void round_trip(Check& c) {
  const LabelSet labels = LabelSet::defaults();
  const Corpus corpus = load_corpus(kData / "gold_sample.jsonl", labels);
  c.require(corpus.documents.size() == 20, "gold sample must hold 20 documents");
  for (auto g : {Granularity::span_level, Granularity::token_level}) {
    std::vector<DocumentEval> evals;
    for (const auto& d : corpus.documents) {
      const std::string rendered = render_expected_output(flatten_nested(d), g);
      const PredictionSet pred = parse_response(rendered, d, labels, g);
      evals.push_back(evaluate_document(d, pred, {RepairMode::strict_only, false}));
    }
    const EvalReport r = aggregate(evals, labels.names());
    const std::string name(to_string(g));
    c.require(r.micro.precision == 1.0 && r.micro.recall == 1.0 && r.micro.f1 == 1.0,
              name + ": P/R/F1 " + format_rate(r.micro.precision) + "/" + format_rate(r.micro.recall) + "/" +
                  format_rate(r.micro.f1));
    c.require(r.counts.tp > 0, name + ": nothing scored");
  }
}

int run(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

void replay_end_to_end(Check& c) {
  const fs::path data = kData / "acceptance";
  const fs::path scratch = fs::temp_directory_path() / ("fsner_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(scratch);
  std::vector<std::string> outputs;
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path run_dir = scratch / ("run" + std::to_string(pass));
    std::string err;
    c.require(run({"extract", "-c", (data / "run.ini").string(), "--fixtures", (data / "fixtures").string(), "-o",
                   (run_dir / "extract").string()},
                  &err) == 0,
              "extract failed: " + err);
    c.require(run({"evaluate", "--corpus", (data / "test.jsonl").string(), "--labels", (data / "labels.json").string(),
                   "--predictions", (run_dir / "extract" / "predictions").string(), "-o",
                   (run_dir / "report").string()},
                  &err) == 0,
              "evaluate failed: " + err);
    std::string all;
    for (const char* f : {"report.json", "report.strict_only.json", "report.with_regrounded.json", "documents.jsonl",
                          "report.txt"}) {
      const std::string produced = slurp(run_dir / "report" / f);
      c.require(produced == slurp(data / "expected" / f), std::string("differs from committed ") + f);
      all += produced;
    }
    std::vector<fs::path> preds;
    for (const auto& e : fs::directory_iterator(run_dir / "extract" / "predictions")) preds.push_back(e.path());
    std::sort(preds.begin(), preds.end());
    for (const auto& p : preds) all += slurp(p);
    outputs.push_back(std::move(all));
  }
  c.require(outputs[0] == outputs[1], "two consecutive runs differ");

  // Hand-counted expectations.
  const json expected = json::parse(slurp(data / "expected_counts.json"));
  for (const char* mode : {"strict_only", "with_regrounded"}) {
    const json report = json::parse(slurp(scratch / "run0" / "report" / (std::string("report.") + mode + ".json")));
    for (const char* k : {"tp", "fp", "fn"}) {
      c.require(report["counts"][k] == expected[mode]["counts"][k], std::string(mode) + " " + k);
    }
    for (const auto& [k, v] : expected[mode]["span_outcomes"].items()) {
      c.require(report["span_outcomes"][k] == v, std::string(mode) + " span_outcomes." + k);
    }
    if (expected[mode].contains("per_label")) {
      for (const auto& [label, triple] : expected[mode]["per_label"].items()) {
        for (const char* k : {"tp", "fp", "fn"}) {
          c.require(report["per_label"][label][k] == triple[k], std::string(mode) + " " + label + " " + k);
        }
      }
    }
    for (const auto& [k, v] : expected["diagnostics"].items()) {
      c.require(report["diagnostics"][k] == v, std::string("diagnostics.") + k);
    }
    c.require(report["documents"] == expected["documents"], "documents");
    c.require(report["span_outcomes"]["gold"] == expected["gold_spans"], "gold spans");
  }
  fs::remove_all(scratch);
}

// Mutates a valid response into something between slightly off and garbage.
std::string mutate(std::string s, std::mt19937_64& rng) {
  static const std::vector<std::string> inserts = {
      "[", "]", "{", "}", ",", ":", "\"", "\\", "null", "-1", "1e309", "\"label\":", "\"text\":\"\\ud800\"",
      "```json\n", "\xff", "\xe2\x80", "[[[[", "]]]", "{\"start_token\":99999999999999999999}", "\n"};
  const int edits = 1 + static_cast<int>(rng() % 6);
  for (int e = 0; e < edits; ++e) {
    const std::size_t pos = s.empty() ? 0 : rng() % (s.size() + 1);
    switch (rng() % 5) {
      case 0:
        if (!s.empty() && pos < s.size()) s.erase(pos, 1 + rng() % 8);
        break;
      case 1: s.insert(pos, inserts[rng() % inserts.size()]); break;
      case 2:
        if (pos < s.size()) s[pos] = static_cast<char>(rng() % 256);
        break;
      case 3: s = s.substr(0, pos); break;
      default: s.insert(pos, std::string(1 + rng() % 3, static_cast<char>(rng() % 256))); break;
    }
  }
  return s;
}

void parser_totality(Check& c) {
  const LabelSet labels = LabelSet::defaults();
  const Corpus corpus = load_corpus(kData / "gold_sample.jsonl", labels);
  std::mt19937_64 rng(4242);
  for (int i = 0; i < 10000; ++i) {
    const Document& d = corpus.documents[rng() % corpus.documents.size()];
    const Granularity g = rng() % 2 ? Granularity::span_level : Granularity::token_level;
    std::string raw;
    if (rng() % 10 == 0) {
      raw.resize(rng() % 200);
      for (auto& ch : raw) ch = static_cast<char>(rng() % 256);
    } else {
      raw = mutate("Answer:\n" + render_expected_output(flatten_nested(d), g), rng);
    }
    const PredictionSet pred = parse_response(raw, d, labels, g);
    const auto payload = extract_payload(raw);
    const Diagnostics diag = pred.diagnostics();
    const std::size_t expected_records = payload ? payload->size() : 0;
    if (diag.records != expected_records || diag.accepted + diag.dropped() != diag.records ||
        pred.no_payload == payload.has_value()) {
      c.require(false, "counts do not reconcile on input " + std::to_string(i));
      return;
    }
    const auto text = unicode::decode(d.text);
    for (const auto& s : pred.accepted_spans()) {
      c.require(s.end_char <= text.size() &&
                    unicode::encode(std::u32string_view(text).substr(s.start_char, s.end_char - s.start_char)) == s.text,
                "ungrounded accepted span on input " + std::to_string(i));
    }
    (void)evaluate_document(d, pred);
  }
}

void batch_scale(Check& c) {
  const LabelSet labels = LabelSet::defaults();
  const auto sample = testing::french_sample();
  std::mt19937_64 rng(99);
  std::vector<Document> docs;
  for (int i = 0; i < 200; ++i) {
    std::string text;
    for (int k = 0; k < 6; ++k) text += sample[rng() % sample.size()] + " ";
    Document d = document_from_text("b" + std::to_string(i), text);
    d.token_labels.assign(d.tokens.size(), "O");
    for (std::size_t t = 0; t + 2 < d.tokens.size(); t += 4 + rng() % 4) {
      const std::string l = labels.names()[rng() % labels.size()];
      d.spans.push_back(GoldSpan{t, t + 1 + rng() % 2, l, 0});
      for (std::size_t k = t; k < d.spans.back().end_token; ++k) d.token_labels[k] = l;
    }
    docs.push_back(std::move(d));
  }
  std::vector<DocumentEval> evals;
  std::size_t parsed = 0;
  for (const auto& d : docs) {
    std::string raw = render_expected_output(d, Granularity::span_level);
    if (rng() % 3 == 0) raw = "Voici:\n```json\n" + raw + "\n```";
    const PredictionSet pred = parse_response(raw, d, labels, Granularity::span_level);
    parsed += pred.outcomes.size();
    evals.push_back(evaluate_document(d, pred));
  }
  const EvalReport r = aggregate(evals, labels.names());
  c.require(r.documents == 200, "document count");
  c.require(parsed > 1000, "too few spans for a meaningful batch");
  c.require(r.micro.f1 == 1.0, "self-consistent batch must score 1.0");
}

}  // namespace

int main() {
  criterion("published_f1_arithmetic", 1.0, table_arithmetic);
  criterion("metric_oracle_equivalence_1000", 5000.0, metric_oracle);
  criterion("tokenizer_invariants_10000", 5000.0, tokenizer_invariants);
  criterion("round_trip_20_documents", 1000.0, round_trip);
  criterion("end_to_end_replay", 2000.0, replay_end_to_end);
  criterion("parser_totality_10000", 10000.0, parser_totality);
  criterion("batch_scale_200_documents", 1000.0, batch_scale);
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
