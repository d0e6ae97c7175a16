#include "fsner/promptgen.hpp"

#include <cmath>

#include "fsner/error.hpp"
#include "fsner/hash.hpp"
#include "fsner/unicode.hpp"

namespace fsner {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Granularity g) {
  return g == Granularity::token_level ? "token_level" : "span_level";
}

Granularity granularity_from_string(std::string_view name) {
  if (name == "token_level" || name == "token") return Granularity::token_level;
  if (name == "span_level" || name == "span") return Granularity::span_level;
  throw PromptError("unknown granularity \"" + std::string(name) + "\" (expected token_level or span_level)");
}

std::string prompt_fingerprint(std::string_view system_text, std::string_view user_text) {
  std::string material;
  material.reserve(system_text.size() + user_text.size() + 32);
  material += std::to_string(system_text.size());
  material += ':';
  material += system_text;
  material += std::to_string(user_text.size());
  material += ':';
  material += user_text;
  return sha256_hex(material);
}

namespace {

std::string dump(const ordered_json& j) { return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace); }

std::string json_lines(const std::vector<ordered_json>& rows) {
  if (rows.empty()) return "[]";
  std::string out = "[\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out += dump(rows[i]);
    out += i + 1 < rows.size() ? ",\n" : "\n";
  }
  out += "]";
  return out;
}

}  // namespace

std::string render_input(std::span<const Token> tokens) {
  if (tokens.empty()) throw PromptError("render_input: document has no tokens");
  std::vector<ordered_json> rows;
  rows.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    rows.push_back(ordered_json{{"i", i}, {"text", tokens[i].text}, {"start", tokens[i].start}, {"end", tokens[i].end}});
  }
  return json_lines(rows);
}

std::string render_expected_output(const Document& doc, Granularity granularity) {
  if (!doc.has_gold()) throw PromptError("render_expected_output: document \"" + doc.id + "\" has no gold annotations");
  std::vector<ordered_json> rows;
  if (granularity == Granularity::token_level) {
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      rows.push_back(ordered_json{{"index", i}, {"text", doc.tokens[i].text}, {"label", doc.token_labels[i]}});
    }
    return json_lines(rows);
  }
  const std::u32string text = unicode::decode(doc.text);
  for (const auto& span : doc.spans) {
    if (span.depth != 0) continue;
    const CharSpan chars = token_extent(doc.tokens, span.interval());
    rows.push_back(ordered_json{{"start_token", span.start_token},
                                {"end_token", span.end_token},
                                {"start_char", chars.begin},
                                {"end_char", chars.end},
                                {"text", unicode::encode(std::u32string_view(text).substr(chars.begin, chars.end - chars.begin))},
                                {"label", span.label}});
  }
  return json_lines(rows);
}

namespace {

void check_exemplar_labels(const Document& ex, const LabelSet& labels) {
  if (!ex.has_gold()) throw PromptError("build_prompt: exemplar \"" + ex.id + "\" has no gold annotations");
  for (const auto& l : ex.token_labels) {
    if (l != kOutsideLabel && !labels.contains(l)) {
      throw PromptError("build_prompt: exemplar \"" + ex.id + "\" uses label \"" + l + "\" outside the label set");
    }
  }
  for (const auto& s : ex.spans) {
    if (!labels.contains(s.label)) {
      throw PromptError("build_prompt: exemplar \"" + ex.id + "\" uses label \"" + s.label + "\" outside the label set");
    }
  }
}

std::string render_labels(const LabelSet& labels) {
  std::string out;
  for (const auto& l : labels.labels()) {
    if (!out.empty()) out += '\n';
    out += "- " + l.name;
    if (!l.description.empty()) out += ": " + l.description;
  }
  return out;
}

}  // namespace

Prompt build_prompt(Granularity granularity, const LabelSet& labels, std::span<const Document> exemplars,
                    const Document& target, const TemplateSet& templates) {
  if (exemplars.empty()) throw PromptError("build_prompt: at least one exemplar is required");
  for (const auto& ex : exemplars) check_exemplar_labels(ex, labels);

  const bool tokens = granularity == Granularity::token_level;
  Prompt prompt;
  prompt.granularity = granularity;
  prompt.target_id = target.id;
  prompt.system_text = render_template(
      templates.system, {{"task", tokens ? templates.task_token_level : templates.task_span_level},
                         {"labels", render_labels(labels)},
                         {"format", tokens ? templates.format_token_level : templates.format_span_level}});

  std::string blocks;
  for (std::size_t k = 0; k < exemplars.size(); ++k) {
    const Document flat = flatten_nested(exemplars[k]);
    if (k) blocks += '\n';
    blocks += render_template(templates.exemplar, {{"number", std::to_string(k + 1)},
                                                   {"input", render_input(flat.tokens)},
                                                   {"output", render_expected_output(flat, granularity)}});
    prompt.exemplar_ids.push_back(flat.id);
  }
  prompt.user_text = render_template(templates.user, {{"exemplars", blocks}, {"target", render_input(target.tokens)}});
  prompt.fingerprint = prompt_fingerprint(prompt.system_text, prompt.user_text);
  return prompt;
}

BudgetCheck check_context_budget(const Prompt& prompt, std::size_t budget, double chars_per_unit) {
  if (budget == 0) throw PromptError("check_context_budget: budget must be positive");
  if (!(chars_per_unit > 0)) throw PromptError("check_context_budget: chars_per_unit must be positive");
  const std::size_t chars = unicode::length(prompt.system_text) + unicode::length(prompt.user_text);
  const auto units = static_cast<std::size_t>(std::ceil(static_cast<double>(chars) / chars_per_unit));
  return {units <= budget, units};
}

ordered_json prompt_to_json(const Prompt& prompt) {
  return ordered_json{{"fingerprint", prompt.fingerprint},
                      {"granularity", to_string(prompt.granularity)},
                      {"target_id", prompt.target_id},
                      {"exemplar_ids", prompt.exemplar_ids},
                      {"system_text", prompt.system_text},
                      {"user_text", prompt.user_text}};
}

Prompt prompt_from_json(const nlohmann::json& j) {
  try {
    Prompt p;
    p.system_text = j.at("system_text").get<std::string>();
    p.user_text = j.at("user_text").get<std::string>();
    p.granularity = granularity_from_string(j.at("granularity").get<std::string>());
    p.exemplar_ids = j.value("exemplar_ids", std::vector<std::string>{});
    p.target_id = j.value("target_id", std::string{});
    p.fingerprint = prompt_fingerprint(p.system_text, p.user_text);
    if (j.contains("fingerprint") && j["fingerprint"].get<std::string>() != p.fingerprint) {
      throw PromptError("prompt: stored fingerprint does not match its text");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw PromptError(std::string("prompt: ") + e.what());
  }
}

}  // namespace fsner
