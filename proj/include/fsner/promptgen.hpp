#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fsner/corpus.hpp"

namespace fsner {

enum class Granularity { token_level, span_level };

std::string_view to_string(Granularity g);
Granularity granularity_from_string(std::string_view name);

/// Prompt wording. Each field is a plain-text template with {{placeholder}}
/// markers:
///   system    {{task}} {{labels}} {{format}}
///   exemplar  {{number}} {{input}} {{output}}
///   user      {{exemplars}} {{target}}
/// The task and format texts are picked by granularity and have no
/// placeholders.
struct TemplateSet {
  std::string system;
  std::string task_token_level;
  std::string task_span_level;
  std::string format_token_level;
  std::string format_span_level;
  std::string exemplar;
  std::string user;

  static TemplateSet defaults();

  /// Reads <dir>/system.txt, task.token_level.txt, task.span_level.txt,
  /// format.token_level.txt, format.span_level.txt, exemplar.txt, user.txt.
  /// Missing files keep the default text.
  static TemplateSet load(const std::filesystem::path& dir);

  /// Writes the seven files to `dir`.
  void save(const std::filesystem::path& dir) const;
};

/// Replaces {{name}} markers in one pass. Substituted values are not
/// rescanned. Throws PromptError on a marker with no value.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

struct Prompt {
  std::string system_text;
  std::string user_text;
  Granularity granularity = Granularity::span_level;
  std::vector<std::string> exemplar_ids;
  std::string target_id;
  std::string fingerprint;
};

/// SHA-256 over the length-prefixed system and user texts.
std::string prompt_fingerprint(std::string_view system_text, std::string_view user_text);

/// JSON array with one {"i","text","start","end"} object per line.
/// Throws PromptError on an empty token list.
std::string render_input(std::span<const Token> tokens);

/// Gold answer in the format the model is asked to produce. Token level lists
/// every token as {"index","text","label"}; span level lists depth-0 spans as
/// {"start_token","end_token","start_char","end_char","text","label"}.
std::string render_expected_output(const Document& doc, Granularity granularity);

Prompt build_prompt(Granularity granularity, const LabelSet& labels, std::span<const Document> exemplars,
                    const Document& target, const TemplateSet& templates = TemplateSet::defaults());

struct BudgetCheck {
  bool fits = false;
  std::size_t estimated_units = 0;
};

/// Estimates prompt size as ceil(characters / chars_per_unit), counting the
/// scalar values of system and user text.
BudgetCheck check_context_budget(const Prompt& prompt, std::size_t budget, double chars_per_unit = 4.0);

nlohmann::ordered_json prompt_to_json(const Prompt& prompt);
Prompt prompt_from_json(const nlohmann::json& j);

}  // namespace fsner
