#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsner/evaluator.hpp"

namespace fsner {

/// One row of the Model / Precision / Recall / F1 table.
struct ScoreRow {
  std::string model;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Published token-level scores, shown as reference rows.
inline const std::array<ScoreRow, 4> kReferenceScores{{
    {"GPT-3.5 (published)", 0.81, 0.36, 0.50},
    {"GPT-4 (published)", 0.75, 0.62, 0.67},
    {"GPT-4o (published)", 0.68, 0.72, 0.70},
    {"Fine-tuned BERT (published)", 0.93, 0.94, 0.93},
}};

/// Half-up rounding to `digits` decimals. A 1e-9 nudge absorbs binary
/// representation error, so 0.125 rounds to 0.13.
double round_half_up(double value, int digits = 2);

/// "0.50"-style fixed two-decimal rendering after half-up rounding.
std::string format_rate(double value);

nlohmann::ordered_json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

/// Row for a report; the model column is "<model> [<repair mode>]".
ScoreRow score_row(const EvalReport& report);

std::string render_table(const std::vector<ScoreRow>& rows, bool with_reference = true);
std::string render_csv(const std::vector<ScoreRow>& rows);

/// Human-readable per-label and span-outcome breakdown of one report.
std::string render_details(const EvalReport& report);

}  // namespace fsner
