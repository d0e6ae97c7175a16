#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsner/corpus.hpp"
#include "fsner/promptgen.hpp"

namespace fsner {

enum class Grounding { verbatim, re_grounded, rejected };

std::string_view to_string(Grounding g);
Grounding grounding_from_string(std::string_view name);

/// Which accepted predictions count in metrics.
enum class RepairMode { strict_only, with_regrounded };

std::string_view to_string(RepairMode m);
RepairMode repair_mode_from_string(std::string_view name);

/// Fate of one payload record. Every record gets exactly one.
enum class RecordStatus {
  accepted,
  repaired,  // counted as text_mismatch_repaired
  schema_violation,
  missing_attribute,
  out_of_bounds,
  text_mismatch_rejected,
  unknown_label,
  example_echo,
  duplicate,
};

struct RecordOutcome {
  RecordStatus status = RecordStatus::accepted;
  std::string attribute;  // set for missing_attribute

  friend bool operator==(const RecordOutcome&, const RecordOutcome&) = default;
};

std::string to_string(const RecordOutcome& outcome);
RecordOutcome record_outcome_from_string(std::string_view text);

struct Diagnostics {
  std::size_t records = 0;
  std::size_t accepted = 0;
  std::size_t no_payload = 0;
  std::size_t schema_violation = 0;
  std::map<std::string, std::size_t> missing_attribute;
  std::size_t out_of_bounds = 0;
  std::size_t text_mismatch_repaired = 0;
  std::size_t text_mismatch_rejected = 0;
  std::size_t unknown_label = 0;
  std::size_t example_echo = 0;
  std::size_t duplicate = 0;

  std::size_t dropped() const;
  Diagnostics& operator+=(const Diagnostics& other);
  nlohmann::ordered_json to_json() const;
  static Diagnostics from_json(const nlohmann::json& j);

  friend bool operator==(const Diagnostics&, const Diagnostics&) = default;
};

struct PredictedSpan {
  std::size_t start_token = 0;
  std::size_t end_token = 0;
  std::size_t start_char = 0;
  std::size_t end_char = 0;
  std::string text;
  std::string label;
  Grounding grounding = Grounding::rejected;

  TokenSpan interval() const { return {start_token, end_token}; }
  friend bool operator==(const PredictedSpan&, const PredictedSpan&) = default;
};

struct PredictedToken {
  std::size_t index = 0;
  std::string text;
  std::string label;
  Grounding grounding = Grounding::verbatim;

  friend bool operator==(const PredictedToken&, const PredictedToken&) = default;
};

/// Parsed model answer for one document. `spans` and `tokens` hold every
/// record that reached grounding, rejected ones included; use the accepted_*
/// accessors for scoring.
struct PredictionSet {
  std::string document_id;
  Granularity granularity = Granularity::span_level;
  std::vector<PredictedSpan> spans;
  std::vector<PredictedToken> tokens;
  std::vector<RecordOutcome> outcomes;  // one per payload record, in payload order
  bool no_payload = false;
  bool example_echo = false;
  double echo_ratio = 0.0;
  std::string raw_text;
  std::string fingerprint;
  std::string model_name;
  std::optional<std::string> failure;  // transport failure; no records when set

  Diagnostics diagnostics() const;

  std::vector<PredictedSpan> accepted_spans(RepairMode mode = RepairMode::with_regrounded) const;

  /// Label per token ("O" for tokens without an accepted record).
  std::vector<std::string> token_labels(std::size_t token_count,
                                        RepairMode mode = RepairMode::with_regrounded) const;

  friend bool operator==(const PredictionSet&, const PredictionSet&) = default;
};

nlohmann::ordered_json prediction_to_json(const PredictionSet& pred);
PredictionSet prediction_from_json(const nlohmann::json& j);

/// First well-formed JSON array in `raw`, skipping prose and code fences.
std::optional<nlohmann::json> extract_payload(std::string_view raw);

/// Claimed fields of one span record; absent fields stay empty.
struct SpanRecord {
  std::optional<long long> start_token;
  std::optional<long long> end_token;
  std::optional<long long> start_char;
  std::optional<long long> end_char;
  std::optional<std::string> text;
  std::string label;
};

struct GroundResult {
  PredictedSpan span;
  RecordStatus status = RecordStatus::accepted;  // accepted, repaired, out_of_bounds or text_mismatch_rejected
};

/// Resolves a span record against the document.
///  1. A valid token interval whose surface equals the claimed text (or with no
///     claimed text) is accepted verbatim; char offsets come from the tokens.
///  2. Otherwise the claimed text is searched in the document among
///     occurrences that sit on token boundaries; the one starting nearest the
///     claimed start_char (ties to the left) wins. It is verbatim if it equals
///     the claimed char interval, re_grounded otherwise.
///  3. A record with no text but a char interval on token boundaries is
///     verbatim.
///  4. Anything else is rejected.
GroundResult ground_span(const SpanRecord& record, const Document& doc, std::u32string_view doc_text);
GroundResult ground_span(const SpanRecord& record, const Document& doc);

PredictionSet parse_span_output(const nlohmann::json& payload, const Document& doc, const LabelSet& labels);
PredictionSet parse_token_output(const nlohmann::json& payload, const Document& doc, const LabelSet& labels);

/// extract_payload followed by the parser for `granularity`.
PredictionSet parse_response(std::string_view raw, const Document& doc, const LabelSet& labels,
                             Granularity granularity);

inline constexpr double kDefaultEchoThreshold = 0.5;

/// Rejects every record when at least `threshold` of the predicted surface
/// strings occur in an exemplar text but not in the target text. Records that
/// reached grounding are then counted as example_echo.
PredictionSet detect_example_echo(PredictionSet pred, std::span<const Document> exemplars, const Document& target,
                                  double threshold = kDefaultEchoThreshold);

}  // namespace fsner
