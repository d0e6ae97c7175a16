#include "fsner/cli.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "fsner/corpus.hpp"
#include "fsner/error.hpp"
#include "fsner/evaluator.hpp"
#include "fsner/hash.hpp"
#include "fsner/report.hpp"
#include "fsner/tokenizer.hpp"

namespace fsner {
namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitEnv = 2;

/// Data or environment problem that maps to exit code 2.
class EnvError : public Error {
 public:
  using Error::Error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EnvError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw EnvError("cannot write " + path.string());
  out << content;
}

std::string dump_line(const ordered_json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string dump_pretty(const ordered_json& j) {
  return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

/// File stem for a document id; ids that are not filename-safe get a hash suffix.
std::string file_stem(const std::string& id) {
  std::string out;
  for (char c : id) {
    const bool safe = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                      c == '_' || c == '.';
    out += safe ? c : '_';
  }
  if (out != id || out.empty() || out.front() == '.') out += "-" + sha256_hex(id).substr(0, 8);
  return out;
}

LabelSet labels_from(const fs::path& path) { return path.empty() ? LabelSet::defaults() : load_label_set(path); }

TemplateSet templates_from(const fs::path& dir) { return dir.empty() ? TemplateSet::defaults() : TemplateSet::load(dir); }

std::vector<Document> pick_exemplars(const Corpus& corpus, const std::vector<std::string>& ids, std::size_t count) {
  std::vector<Document> out;
  if (!ids.empty()) {
    for (const auto& id : ids) out.push_back(flatten_nested(select_exemplar(corpus, id)));
    return out;
  }
  Corpus remaining = corpus;
  for (std::size_t k = 0; k < count; ++k) {
    const Document& doc = select_exemplar(remaining);
    out.push_back(flatten_nested(doc));
    const std::string id = doc.id;
    std::erase_if(remaining.documents, [&](const Document& d) { return d.id == id; });
  }
  return out;
}

// ---------------------------------------------------------------------------
// tokenize

int cmd_tokenize(const std::optional<std::string>& text, const std::optional<std::string>& file, bool as_json,
                 std::ostream& out) {
  std::string input;
  if (file) {
    input = read_file(*file);
  } else if (text) {
    input = *text;
  } else {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    input = buf.str();
  }
  const auto tokens = tokenize(input);
  if (as_json) {
    out << (tokens.empty() ? std::string("[]") : render_input(tokens)) << "\n";
  } else {
    for (const auto& t : tokens) out << t.index << '\t' << t.start << '\t' << t.end << '\t' << t.text << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// build-prompt

struct BuildPromptArgs {
  fs::path corpus;
  fs::path exemplar_corpus;
  fs::path labels;
  fs::path templates;
  std::string granularity = "span_level";
  std::string doc_id;
  std::optional<std::string> text;
  std::vector<std::string> exemplar_ids;
  std::size_t exemplars = 1;
  fs::path output;
  std::size_t budget = 0;
  double chars_per_unit = 4.0;
};

int cmd_build_prompt(const BuildPromptArgs& a, std::ostream& out, std::ostream& err) {
  const LabelSet labels = labels_from(a.labels);
  const Granularity granularity = granularity_from_string(a.granularity);
  const fs::path exemplar_path = a.exemplar_corpus.empty() ? a.corpus : a.exemplar_corpus;
  if (exemplar_path.empty()) throw ConfigError("build-prompt: --corpus or --exemplar-corpus is required");
  const Corpus exemplar_corpus = load_corpus(exemplar_path, labels);
  const auto exemplars = pick_exemplars(exemplar_corpus, a.exemplar_ids, a.exemplar_ids.empty() ? a.exemplars : a.exemplar_ids.size());

  Document target;
  if (a.text) {
    target = document_from_text(a.doc_id.empty() ? "input" : a.doc_id, *a.text);
  } else {
    if (a.corpus.empty() || a.doc_id.empty()) throw ConfigError("build-prompt: give --text, or --corpus with --doc-id");
    const Corpus corpus = load_corpus(a.corpus, labels);
    const Document* doc = corpus.find(a.doc_id);
    if (!doc) throw EnvError("build-prompt: no document \"" + a.doc_id + "\" in " + a.corpus.string());
    target = *doc;
  }
  const Prompt prompt = build_prompt(granularity, labels, exemplars, target, templates_from(a.templates));
  const std::string rendered = dump_pretty(prompt_to_json(prompt));
  if (a.output.empty()) {
    out << rendered;
  } else {
    write_file(a.output, rendered);
    out << prompt.fingerprint << "\n";
  }
  if (a.budget > 0) {
    const BudgetCheck check = check_context_budget(prompt, a.budget, a.chars_per_unit);
    err << "context budget: " << check.estimated_units << " estimated units of " << a.budget
        << (check.fits ? " (fits)" : " (exceeds budget)") << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// record

int cmd_record(const fs::path& prompt_path, const fs::path& response_path, const fs::path& store,
               const std::string& model, std::ostream& out) {
  json j = json::parse(read_file(prompt_path), nullptr, false);
  if (j.is_discarded()) throw EnvError("record: " + prompt_path.string() + " is not valid JSON");
  const Prompt prompt = prompt_from_json(j);
  RawResponse response;
  response.text = read_file(response_path);
  response.request_fingerprint = prompt.fingerprint;
  response.model_name = model;
  FixtureStore(store).record(prompt, response);
  out << prompt.fingerprint << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// extract

struct DocumentRun {
  PredictionSet prediction;
  std::optional<Prompt> prompt;
  double latency_ms = 0.0;
  std::string transport;
};

std::unique_ptr<CompletionProvider> make_provider(const RunConfig& c) {
  switch (c.mode) {
    case ProviderMode::live: return std::make_unique<HttpChatClient>(c.model);
    case ProviderMode::replay: return std::make_unique<ReplayProvider>(c.fixtures);
    case ProviderMode::record: return std::make_unique<RecordingProvider>(c.model, c.fixtures);
  }
  throw ConfigError("unknown provider mode");
}

DocumentRun run_document(const Document& target, const std::vector<Document>& exemplars, const LabelSet& labels,
                         const TemplateSet& templates, const RunConfig& c, CompletionProvider& provider) {
  DocumentRun run;
  run.prediction.document_id = target.id;
  run.prediction.granularity = c.granularity;
  run.prediction.model_name = c.model.model_name;
  try {
    run.prompt = build_prompt(c.granularity, labels, exemplars, target, templates);
  } catch (const Error& e) {
    run.prediction.failure = std::string("prompt: ") + e.what();
    run.transport = "not sent";
    return run;
  }
  run.prediction.fingerprint = run.prompt->fingerprint;
  const RawResponse response = provider.complete(*run.prompt);
  run.latency_ms = response.latency_ms;
  run.transport = response.status.to_string();
  if (!response.text) {
    run.prediction.failure = response.status.reason();
    return run;
  }
  PredictionSet pred = parse_response(*response.text, target, labels, c.granularity);
  pred = detect_example_echo(std::move(pred), exemplars, target, c.echo_threshold);
  pred.fingerprint = run.prompt->fingerprint;
  pred.model_name = response.model_name.empty() ? c.model.model_name : response.model_name;
  run.prediction = std::move(pred);
  return run;
}

void clear_artifacts(const fs::path& dir, std::string_view extension) {
  if (!fs::is_directory(dir)) return;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) fs::remove(entry.path());
  }
}

int cmd_extract(const RunConfig& c, std::ostream& out, std::ostream& err) {
  c.validate();
  auto provider = make_provider(c);  // resolves credentials before any request

  const LabelSet labels = labels_from(c.labels);
  const TemplateSet templates = templates_from(c.templates);
  const Corpus corpus = load_corpus(c.corpus, labels, Split::test);
  const bool same_corpus = c.exemplar_corpus.empty() || c.exemplar_corpus == c.corpus;
  const Corpus exemplar_corpus = same_corpus ? corpus : load_corpus(c.exemplar_corpus, labels, Split::train);
  const auto exemplars = pick_exemplars(exemplar_corpus, c.exemplar_ids, c.exemplar_count);

  std::set<std::string> exemplar_ids;
  for (const auto& e : exemplars) exemplar_ids.insert(e.id);
  std::vector<const Document*> targets;
  std::vector<std::string> skipped;
  for (const auto& d : corpus.documents) {
    if (same_corpus && exemplar_ids.count(d.id)) {
      skipped.push_back(d.id);
    } else {
      targets.push_back(&d);
    }
  }

  std::vector<DocumentRun> runs(targets.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < targets.size(); i = next++) {
      runs[i] = run_document(*targets[i], exemplars, labels, templates, c, *provider);
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t workers = std::min(c.concurrency, std::max<std::size_t>(targets.size(), 1));
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  const fs::path pred_dir = c.output / "predictions";
  const fs::path prompt_dir = c.output / "prompts";
  const fs::path raw_dir = c.output / "raw";
  for (const auto& d : {pred_dir, prompt_dir, raw_dir}) fs::create_directories(d);
  clear_artifacts(pred_dir, ".jsonl");
  clear_artifacts(prompt_dir, ".json");
  clear_artifacts(raw_dir, ".txt");

  ordered_json docs = ordered_json::array();
  std::size_t failed = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const DocumentRun& run = runs[i];
    const std::string stem = file_stem(targets[i]->id);
    write_file(pred_dir / (stem + ".jsonl"), dump_line(prediction_to_json(run.prediction)) + "\n");
    if (run.prompt) write_file(prompt_dir / (stem + ".json"), dump_pretty(prompt_to_json(*run.prompt)));
    if (!run.prediction.failure) write_file(raw_dir / (stem + ".txt"), run.prediction.raw_text);
    if (run.prediction.failure) {
      ++failed;
      err << "warning: document \"" << targets[i]->id << "\" failed: " << *run.prediction.failure << "\n";
    }
    docs.push_back(ordered_json{{"id", targets[i]->id},
                                {"file", stem + ".jsonl"},
                                {"fingerprint", run.prompt ? run.prompt->fingerprint : std::string{}},
                                {"status", run.prediction.failure ? "failed" : "ok"},
                                {"transport", run.transport},
                                {"latency_ms", run.latency_ms}});
  }

  std::string template_material;
  for (const auto* t : {&templates.system, &templates.task_token_level, &templates.task_span_level,
                        &templates.format_token_level, &templates.format_span_level, &templates.exemplar,
                        &templates.user}) {
    template_material += std::to_string(t->size()) + ":" + *t;
  }
  std::vector<std::string> ids;
  for (const auto& e : exemplars) ids.push_back(e.id);
  const ordered_json manifest{{"command", "extract"},
                              {"config", c.to_json()},
                              {"label_set", label_set_to_json(labels)},
                              {"templates_sha256", sha256_hex(template_material)},
                              {"exemplar_ids", ids},
                              {"skipped_exemplar_documents", skipped},
                              {"documents", std::move(docs)},
                              {"summary", {{"documents", runs.size()}, {"ok", runs.size() - failed}, {"failed", failed}}}};
  write_file(c.output / "manifest.json", dump_pretty(manifest));
  out << "extracted " << runs.size() << " document(s): " << runs.size() - failed << " ok, " << failed
      << " failed\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  fs::path corpus;
  fs::path labels;
  fs::path predictions;
  fs::path output;
  std::string model_label;
  std::string granularity = "span_level";
  std::string repair_mode = "with_regrounded";
  bool include_outside = false;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const LabelSet labels = labels_from(a.labels);
  const Corpus corpus = load_corpus(a.corpus, labels, Split::test);
  if (!fs::is_directory(a.predictions)) throw EnvError("evaluate: predictions directory " + a.predictions.string() + " not found");
  const RepairMode headline = repair_mode_from_string(a.repair_mode);

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(a.predictions)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::map<std::string, PredictionSet> by_id;
  for (const auto& f : files) {
    std::istringstream lines(read_file(f));
    std::string line;
    while (std::getline(lines, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) throw EnvError("evaluate: " + f.string() + " contains malformed JSON");
      PredictionSet p = prediction_from_json(j);
      if (!corpus.find(p.document_id)) {
        throw EvalError("evaluate: prediction for unknown document id \"" + p.document_id + "\" in " + f.string());
      }
      const std::string id = p.document_id;
      if (!by_id.emplace(id, std::move(p)).second) throw EvalError("evaluate: two predictions for document \"" + id + "\"");
    }
  }

  std::string model = a.model_label;
  if (model.empty()) {
    for (const auto& [_, p] : by_id) {
      if (!p.model_name.empty()) {
        model = p.model_name;
        break;
      }
    }
  }

  fs::create_directories(a.output);
  std::map<RepairMode, EvalReport> reports;
  std::string per_document;
  for (RepairMode mode : {RepairMode::strict_only, RepairMode::with_regrounded}) {
    std::vector<DocumentEval> evals;
    for (const auto& doc : corpus.documents) {
      auto it = by_id.find(doc.id);
      if (it == by_id.end()) continue;
      evals.push_back(evaluate_document(doc, it->second, EvalOptions{mode, a.include_outside}));
    }
    EvalReport report = aggregate(evals, labels.names(), model);
    if (evals.empty()) {
      report.granularity = granularity_from_string(a.granularity);
      report.repair_mode = mode;
    }
    report.include_outside = a.include_outside;
    for (const auto& e : evals) {
      EvalReport single = aggregate(std::span<const DocumentEval>(&e, 1), {}, model);
      single.include_outside = a.include_outside;
      ordered_json j = report_to_json(single);
      j["document_id"] = e.document_id;
      per_document += dump_line(j) + "\n";
    }
    write_file(a.output / ("report." + std::string(to_string(mode)) + ".json"), dump_pretty(report_to_json(report)));
    reports.emplace(mode, std::move(report));
  }
  write_file(a.output / "report.json", dump_pretty(report_to_json(reports.at(headline))));
  write_file(a.output / "documents.jsonl", per_document);

  std::vector<ScoreRow> rows{score_row(reports.at(RepairMode::strict_only)),
                             score_row(reports.at(RepairMode::with_regrounded))};
  std::string text = render_table(rows, true) + "\n" + render_details(reports.at(RepairMode::strict_only)) + "\n" +
                     render_details(reports.at(RepairMode::with_regrounded));
  write_file(a.output / "report.txt", text);
  out << text;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// report

int cmd_report(const std::vector<std::string>& files, const std::string& format, bool reference, std::ostream& out,
               std::ostream& err) {
  if (files.empty()) {
    err << "report: no report files given\n";
    return kExitUsage;
  }
  std::vector<ScoreRow> rows;
  for (const auto& f : files) {
    json j = json::parse(read_file(f), nullptr, false);
    if (j.is_discarded()) throw EnvError("report: " + f + " is not valid JSON");
    EvalReport r = report_from_json(j);
    if (r.model.empty()) r.model = fs::path(f).stem().string();
    rows.push_back(score_row(r));
  }
  if (format == "table") {
    out << render_table(rows, reference);
  } else if (format == "csv") {
    out << render_csv(rows);
  } else {
    ordered_json arr = ordered_json::array();
    for (const auto& r : rows) {
      arr.push_back(ordered_json{{"model", r.model}, {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}});
    }
    ordered_json refs = ordered_json::array();
    for (const auto& r : kReferenceScores) {
      refs.push_back(ordered_json{{"model", r.model}, {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}});
    }
    out << dump_pretty(ordered_json{{"rows", std::move(arr)}, {"reference", std::move(refs)}});
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// import

int cmd_import(const fs::path& input, const fs::path& profile, const fs::path& labels_path, const fs::path& output,
               std::ostream& out) {
  const LabelSet labels = labels_from(labels_path);
  const ImportProfile p = profile.empty() ? ImportProfile{} : load_import_profile(profile);
  const Corpus corpus = import_corpus(read_file(input), p, labels);
  save_corpus(corpus, output);
  out << "imported " << corpus.documents.size() << " document(s)\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Few-shot LLM named-entity extraction with grounded positions, and strict-match evaluation", "fsner"};
  app.require_subcommand(1);

  // tokenize
  auto* tok = app.add_subcommand("tokenize", "Tokenize text and print index, start, end and text per token");
  std::string tok_text;
  std::string tok_file;
  bool tok_json = false;
  auto* tok_text_opt = tok->add_option("text", tok_text, "Text to tokenize (stdin when omitted)");
  auto* tok_file_opt = tok->add_option("-f,--file", tok_file, "Read the text from a file");
  tok->add_flag("--json", tok_json, "Print the token block used in prompts");
  tok_text_opt->excludes(tok_file_opt);

  // build-prompt
  auto* bp = app.add_subcommand("build-prompt", "Render the prompt for one document");
  BuildPromptArgs bpa;
  std::string bp_text;
  auto* bp_text_opt = bp->add_option("--text", bp_text, "Raw target text (tokenized with the built-in tokenizer)");
  bp->add_option("--corpus", bpa.corpus, "Corpus holding the target document");
  bp->add_option("--doc-id", bpa.doc_id, "Target document id");
  bp->add_option("--exemplar-corpus", bpa.exemplar_corpus, "Corpus to draw exemplars from (default: --corpus)");
  bp->add_option("--exemplar-id", bpa.exemplar_ids, "Pin exemplar document id(s)")->delimiter(',');
  bp->add_option("--exemplars", bpa.exemplars, "Number of exemplars")->check(CLI::PositiveNumber);
  bp->add_option("--labels", bpa.labels, "Label set file (JSON)");
  bp->add_option("--templates", bpa.templates, "Template directory");
  bp->add_option("--granularity", bpa.granularity, "token_level or span_level")
      ->check(CLI::IsMember({"token_level", "span_level"}));
  bp->add_option("-o,--output", bpa.output, "Write the prompt JSON here instead of stdout");
  bp->add_option("--budget", bpa.budget, "Context budget in units; prints an estimate");
  bp->add_option("--chars-per-unit", bpa.chars_per_unit, "Characters per unit for the estimate")
      ->check(CLI::PositiveNumber);

  // extract
  auto* ex = app.add_subcommand("extract", "Run extraction over a corpus");
  std::string config_path;
  RunConfig cli_cfg;
  std::string ex_granularity;
  std::string ex_mode;
  std::string ex_repair;
  long long ex_backoff = 0;
  ex->add_option("-c,--config", config_path, "INI configuration file ([run] and [model] sections)");
  auto* o_corpus = ex->add_option("--corpus", cli_cfg.corpus, "Target corpus (native JSONL)");
  auto* o_excorpus = ex->add_option("--exemplar-corpus", cli_cfg.exemplar_corpus, "Exemplar corpus (default: --corpus)");
  auto* o_labels = ex->add_option("--labels", cli_cfg.labels, "Label set file (JSON)");
  auto* o_templates = ex->add_option("--templates", cli_cfg.templates, "Template directory");
  auto* o_gran = ex->add_option("--granularity", ex_granularity, "token_level or span_level")
                     ->check(CLI::IsMember({"token_level", "span_level"}));
  auto* o_exid = ex->add_option("--exemplar-id", cli_cfg.exemplar_ids, "Pin exemplar document id(s)")->delimiter(',');
  auto* o_exn = ex->add_option("--exemplars", cli_cfg.exemplar_count, "Number of exemplars")->check(CLI::PositiveNumber);
  auto* o_mode = ex->add_option("--mode", ex_mode, "live, replay or record")
                     ->check(CLI::IsMember({"live", "replay", "record"}));
  auto* o_fix = ex->add_option("--fixtures", cli_cfg.fixtures, "Fixture store directory");
  auto* o_out = ex->add_option("-o,--output", cli_cfg.output, "Output directory");
  auto* o_conc = ex->add_option("--concurrency", cli_cfg.concurrency, "Maximum in-flight documents")
                     ->check(CLI::PositiveNumber);
  auto* o_repair = ex->add_option("--repair-mode", ex_repair, "Headline repair mode")
                       ->check(CLI::IsMember({"strict_only", "with_regrounded"}));
  auto* o_echo = ex->add_option("--echo-threshold", cli_cfg.echo_threshold, "Example-echo rejection threshold");
  auto* o_endpoint = ex->add_option("--endpoint", cli_cfg.model.endpoint_url, "Chat-completions base URL");
  auto* o_model = ex->add_option("--model", cli_cfg.model.model_name, "Model name");
  auto* o_temp = ex->add_option("--temperature", cli_cfg.model.temperature, "Sampling temperature");
  auto* o_maxout = ex->add_option("--max-output-units", cli_cfg.model.max_output_units, "max_tokens (0: unset)");
  auto* o_timeout = ex->add_option("--timeout", cli_cfg.model.timeout_seconds, "Request timeout in seconds");
  auto* o_retries = ex->add_option("--max-retries", cli_cfg.model.max_retries, "Retries on timeout, 429 and 5xx");
  auto* o_cred = ex->add_option("--credential-ref", cli_cfg.model.credential_ref,
                                "Environment variable holding the API key");
  auto* o_backoff = ex->add_option("--backoff-ms", ex_backoff, "Initial retry backoff in milliseconds");
  auto* o_rate = ex->add_option("--rate-limit", cli_cfg.model.max_requests_per_second,
                                "Maximum request starts per second (0: unlimited)");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score predictions against a gold corpus");
  EvaluateArgs eva;
  ev->add_option("--corpus", eva.corpus, "Gold corpus (native JSONL)")->required();
  ev->add_option("--predictions", eva.predictions, "Predictions directory written by extract")->required();
  ev->add_option("-o,--output", eva.output, "Report output directory")->required();
  ev->add_option("--labels", eva.labels, "Label set file (JSON)");
  ev->add_option("--model-label", eva.model_label, "Model name shown in reports");
  ev->add_option("--granularity", eva.granularity, "Granularity when there are no predictions")
      ->check(CLI::IsMember({"token_level", "span_level"}));
  ev->add_option("--repair-mode", eva.repair_mode, "Repair mode copied to report.json")
      ->check(CLI::IsMember({"strict_only", "with_regrounded"}));
  ev->add_flag("--include-outside", eva.include_outside, "Score the O class at token level");

  // report
  auto* rp = app.add_subcommand("report", "Render report files as a table, CSV or JSON");
  std::vector<std::string> rp_files;
  std::string rp_format = "table";
  bool rp_no_reference = false;
  rp->add_option("reports", rp_files, "Report JSON files");
  rp->add_option("--format", rp_format, "table, csv or json")->check(CLI::IsMember({"table", "csv", "json"}));
  rp->add_flag("--no-reference", rp_no_reference, "Omit the published reference rows");

  // record
  auto* rc = app.add_subcommand("record", "Store a response text as the fixture for a prompt");
  fs::path rc_prompt;
  fs::path rc_response;
  fs::path rc_store;
  std::string rc_model;
  rc->add_option("--prompt", rc_prompt, "Prompt JSON written by build-prompt")->required();
  rc->add_option("--response", rc_response, "File with the raw response text")->required();
  rc->add_option("--store", rc_store, "Fixture store directory")->required();
  rc->add_option("--model", rc_model, "Model name recorded in the index");

  // import
  auto* im = app.add_subcommand("import", "Convert an external dataset with a mapping profile");
  fs::path im_input;
  fs::path im_profile;
  fs::path im_labels;
  fs::path im_output;
  im->add_option("--input", im_input, "External line-delimited dataset")->required();
  im->add_option("--profile", im_profile, "Mapping profile (JSON)");
  im->add_option("--labels", im_labels, "Label set file (JSON)");
  im->add_option("-o,--output", im_output, "Native corpus output")->required();

  std::vector<std::string> argv_storage{"fsner"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "fsner: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (tok->parsed()) {
      return cmd_tokenize(tok_text_opt->count() ? std::optional<std::string>(tok_text) : std::nullopt,
                          tok_file_opt->count() ? std::optional<std::string>(tok_file) : std::nullopt, tok_json, out);
    }
    if (bp->parsed()) {
      if (bp_text_opt->count()) bpa.text = bp_text;
      return cmd_build_prompt(bpa, out, err);
    }
    if (ex->parsed()) {
      RunConfig c = config_path.empty() ? RunConfig{} : load_run_config(config_path);
      if (o_corpus->count()) c.corpus = cli_cfg.corpus;
      if (o_excorpus->count()) c.exemplar_corpus = cli_cfg.exemplar_corpus;
      if (o_labels->count()) c.labels = cli_cfg.labels;
      if (o_templates->count()) c.templates = cli_cfg.templates;
      if (o_gran->count()) c.granularity = granularity_from_string(ex_granularity);
      if (o_exid->count()) {
        c.exemplar_ids = cli_cfg.exemplar_ids;
        c.exemplar_count = c.exemplar_ids.size();
      }
      if (o_exn->count()) c.exemplar_count = cli_cfg.exemplar_count;
      if (o_mode->count()) c.mode = provider_mode_from_string(ex_mode);
      if (o_fix->count()) c.fixtures = cli_cfg.fixtures;
      if (o_out->count()) c.output = cli_cfg.output;
      if (o_conc->count()) c.concurrency = cli_cfg.concurrency;
      if (o_repair->count()) c.repair_mode = repair_mode_from_string(ex_repair);
      if (o_echo->count()) c.echo_threshold = cli_cfg.echo_threshold;
      if (o_endpoint->count()) c.model.endpoint_url = cli_cfg.model.endpoint_url;
      if (o_model->count()) c.model.model_name = cli_cfg.model.model_name;
      if (o_temp->count()) c.model.temperature = cli_cfg.model.temperature;
      if (o_maxout->count()) c.model.max_output_units = cli_cfg.model.max_output_units;
      if (o_timeout->count()) c.model.timeout_seconds = cli_cfg.model.timeout_seconds;
      if (o_retries->count()) c.model.max_retries = cli_cfg.model.max_retries;
      if (o_cred->count()) c.model.credential_ref = cli_cfg.model.credential_ref;
      if (o_backoff->count()) c.model.backoff_initial = std::chrono::milliseconds(ex_backoff);
      if (o_rate->count()) c.model.max_requests_per_second = cli_cfg.model.max_requests_per_second;
      c.model.max_in_flight = c.concurrency;
      return cmd_extract(c, out, err);
    }
    if (ev->parsed()) return cmd_evaluate(eva, out);
    if (rp->parsed()) return cmd_report(rp_files, rp_format, !rp_no_reference, out, err);
    if (rc->parsed()) return cmd_record(rc_prompt, rc_response, rc_store, rc_model, out);
    if (im->parsed()) return cmd_import(im_input, im_profile, im_labels, im_output, out);
  } catch (const std::exception& e) {
    err << "fsner: " << e.what() << "\n";
    return kExitEnv;
  }
  return kExitUsage;
}

}  // namespace fsner
