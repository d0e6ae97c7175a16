#include "fsner/outparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include "fsner/error.hpp"
#include "fsner/unicode.hpp"

namespace fsner {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Grounding g) {
  switch (g) {
    case Grounding::verbatim: return "verbatim";
    case Grounding::re_grounded: return "re_grounded";
    case Grounding::rejected: return "rejected";
  }
  return "rejected";
}

Grounding grounding_from_string(std::string_view name) {
  if (name == "verbatim") return Grounding::verbatim;
  if (name == "re_grounded") return Grounding::re_grounded;
  if (name == "rejected") return Grounding::rejected;
  throw Error("unknown grounding \"" + std::string(name) + "\"");
}

std::string_view to_string(RepairMode m) {
  return m == RepairMode::strict_only ? "strict_only" : "with_regrounded";
}

RepairMode repair_mode_from_string(std::string_view name) {
  if (name == "strict_only" || name == "strict") return RepairMode::strict_only;
  if (name == "with_regrounded" || name == "regrounded") return RepairMode::with_regrounded;
  throw Error("unknown repair mode \"" + std::string(name) + "\" (expected strict_only or with_regrounded)");
}

namespace {

constexpr std::pair<RecordStatus, std::string_view> kStatusNames[] = {
    {RecordStatus::accepted, "accepted"},
    {RecordStatus::repaired, "text_mismatch_repaired"},
    {RecordStatus::schema_violation, "schema_violation"},
    {RecordStatus::missing_attribute, "missing_attribute"},
    {RecordStatus::out_of_bounds, "out_of_bounds"},
    {RecordStatus::text_mismatch_rejected, "text_mismatch_rejected"},
    {RecordStatus::unknown_label, "unknown_label"},
    {RecordStatus::example_echo, "example_echo"},
    {RecordStatus::duplicate, "duplicate"},
};

}  // namespace

std::string to_string(const RecordOutcome& outcome) {
  for (const auto& [status, name] : kStatusNames) {
    if (status == outcome.status) {
      return outcome.status == RecordStatus::missing_attribute ? std::string(name) + ":" + outcome.attribute
                                                               : std::string(name);
    }
  }
  return "unknown";
}

RecordOutcome record_outcome_from_string(std::string_view text) {
  std::string_view head = text;
  std::string attribute;
  if (auto colon = text.find(':'); colon != std::string_view::npos) {
    head = text.substr(0, colon);
    attribute = std::string(text.substr(colon + 1));
  }
  for (const auto& [status, name] : kStatusNames) {
    if (name == head) return RecordOutcome{status, std::move(attribute)};
  }
  throw Error("unknown record outcome \"" + std::string(text) + "\"");
}

// ---------------------------------------------------------------------------
// Diagnostics

std::size_t Diagnostics::dropped() const {
  std::size_t missing = 0;
  for (const auto& [_, n] : missing_attribute) missing += n;
  return schema_violation + missing + out_of_bounds + text_mismatch_rejected + unknown_label + example_echo + duplicate;
}

Diagnostics& Diagnostics::operator+=(const Diagnostics& o) {
  records += o.records;
  accepted += o.accepted;
  no_payload += o.no_payload;
  schema_violation += o.schema_violation;
  for (const auto& [k, n] : o.missing_attribute) missing_attribute[k] += n;
  out_of_bounds += o.out_of_bounds;
  text_mismatch_repaired += o.text_mismatch_repaired;
  text_mismatch_rejected += o.text_mismatch_rejected;
  unknown_label += o.unknown_label;
  example_echo += o.example_echo;
  duplicate += o.duplicate;
  return *this;
}

ordered_json Diagnostics::to_json() const {
  ordered_json missing = ordered_json::object();
  for (const auto& [k, n] : missing_attribute) missing[k] = n;
  return ordered_json{{"records", records},
                      {"accepted", accepted},
                      {"no_payload", no_payload},
                      {"schema_violation", schema_violation},
                      {"missing_attribute", std::move(missing)},
                      {"out_of_bounds", out_of_bounds},
                      {"text_mismatch_repaired", text_mismatch_repaired},
                      {"text_mismatch_rejected", text_mismatch_rejected},
                      {"unknown_label", unknown_label},
                      {"example_echo", example_echo},
                      {"duplicate", duplicate}};
}

Diagnostics Diagnostics::from_json(const json& j) {
  Diagnostics d;
  d.records = j.value("records", std::size_t{0});
  d.accepted = j.value("accepted", std::size_t{0});
  d.no_payload = j.value("no_payload", std::size_t{0});
  d.schema_violation = j.value("schema_violation", std::size_t{0});
  if (j.contains("missing_attribute")) d.missing_attribute = j["missing_attribute"].get<std::map<std::string, std::size_t>>();
  d.out_of_bounds = j.value("out_of_bounds", std::size_t{0});
  d.text_mismatch_repaired = j.value("text_mismatch_repaired", std::size_t{0});
  d.text_mismatch_rejected = j.value("text_mismatch_rejected", std::size_t{0});
  d.unknown_label = j.value("unknown_label", std::size_t{0});
  d.example_echo = j.value("example_echo", std::size_t{0});
  d.duplicate = j.value("duplicate", std::size_t{0});
  return d;
}

// ---------------------------------------------------------------------------
// PredictionSet

Diagnostics PredictionSet::diagnostics() const {
  Diagnostics d;
  d.records = outcomes.size();
  d.no_payload = no_payload ? 1 : 0;
  for (const auto& o : outcomes) {
    switch (o.status) {
      case RecordStatus::accepted: ++d.accepted; break;
      case RecordStatus::repaired:
        ++d.accepted;
        ++d.text_mismatch_repaired;
        break;
      case RecordStatus::schema_violation: ++d.schema_violation; break;
      case RecordStatus::missing_attribute: ++d.missing_attribute[o.attribute]; break;
      case RecordStatus::out_of_bounds: ++d.out_of_bounds; break;
      case RecordStatus::text_mismatch_rejected: ++d.text_mismatch_rejected; break;
      case RecordStatus::unknown_label: ++d.unknown_label; break;
      case RecordStatus::example_echo: ++d.example_echo; break;
      case RecordStatus::duplicate: ++d.duplicate; break;
    }
  }
  return d;
}

namespace {

bool counts(Grounding g, RepairMode mode) {
  return g == Grounding::verbatim || (g == Grounding::re_grounded && mode == RepairMode::with_regrounded);
}

}  // namespace

std::vector<PredictedSpan> PredictionSet::accepted_spans(RepairMode mode) const {
  std::vector<PredictedSpan> out;
  for (const auto& s : spans) {
    if (counts(s.grounding, mode)) out.push_back(s);
  }
  return out;
}

std::vector<std::string> PredictionSet::token_labels(std::size_t token_count, RepairMode mode) const {
  std::vector<std::string> out(token_count, std::string(kOutsideLabel));
  for (const auto& t : tokens) {
    if (counts(t.grounding, mode) && t.index < token_count) out[t.index] = t.label;
  }
  return out;
}

ordered_json prediction_to_json(const PredictionSet& pred) {
  ordered_json j{{"id", pred.document_id},
                 {"granularity", to_string(pred.granularity)},
                 {"status", pred.failure ? "failed" : "ok"}};
  if (pred.failure) j["failure"] = *pred.failure;
  j["fingerprint"] = pred.fingerprint;
  j["model_name"] = pred.model_name;
  ordered_json spans = ordered_json::array();
  for (const auto& s : pred.spans) {
    spans.push_back(ordered_json{{"start_token", s.start_token},
                                 {"end_token", s.end_token},
                                 {"start_char", s.start_char},
                                 {"end_char", s.end_char},
                                 {"text", s.text},
                                 {"label", s.label},
                                 {"grounding", to_string(s.grounding)}});
  }
  ordered_json tokens = ordered_json::array();
  for (const auto& t : pred.tokens) {
    tokens.push_back(ordered_json{
        {"index", t.index}, {"text", t.text}, {"label", t.label}, {"grounding", to_string(t.grounding)}});
  }
  ordered_json outcomes = ordered_json::array();
  for (const auto& o : pred.outcomes) outcomes.push_back(to_string(o));
  j["spans"] = std::move(spans);
  j["tokens"] = std::move(tokens);
  j["outcomes"] = std::move(outcomes);
  j["no_payload"] = pred.no_payload;
  j["example_echo"] = pred.example_echo;
  j["echo_ratio"] = pred.echo_ratio;
  j["diagnostics"] = pred.diagnostics().to_json();
  j["raw_text"] = pred.raw_text;
  return j;
}

PredictionSet prediction_from_json(const json& j) {
  try {
    PredictionSet p;
    p.document_id = j.at("id").get<std::string>();
    p.granularity = granularity_from_string(j.at("granularity").get<std::string>());
    if (j.value("status", std::string("ok")) == "failed") p.failure = j.value("failure", std::string("failed"));
    p.fingerprint = j.value("fingerprint", std::string{});
    p.model_name = j.value("model_name", std::string{});
    for (const auto& s : j.value("spans", json::array())) {
      p.spans.push_back(PredictedSpan{s.at("start_token").get<std::size_t>(), s.at("end_token").get<std::size_t>(),
                                      s.at("start_char").get<std::size_t>(), s.at("end_char").get<std::size_t>(),
                                      s.at("text").get<std::string>(), s.at("label").get<std::string>(),
                                      grounding_from_string(s.at("grounding").get<std::string>())});
    }
    for (const auto& t : j.value("tokens", json::array())) {
      p.tokens.push_back(PredictedToken{t.at("index").get<std::size_t>(), t.value("text", std::string{}),
                                        t.at("label").get<std::string>(),
                                        grounding_from_string(t.at("grounding").get<std::string>())});
    }
    for (const auto& o : j.value("outcomes", json::array())) {
      p.outcomes.push_back(record_outcome_from_string(o.get<std::string>()));
    }
    p.no_payload = j.value("no_payload", false);
    p.example_echo = j.value("example_echo", false);
    p.echo_ratio = j.value("echo_ratio", 0.0);
    p.raw_text = j.value("raw_text", std::string{});
    return p;
  } catch (const json::exception& e) {
    throw Error(std::string("prediction set: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Payload extraction

namespace {

std::size_t matching_bracket(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::optional<json> extract_payload(std::string_view raw) {
  std::size_t pos = raw.find('[');
  while (pos != std::string_view::npos) {
    const std::size_t close = matching_bracket(raw, pos);
    if (close != std::string_view::npos) {
      json j = json::parse(raw.substr(pos, close - pos + 1), nullptr, false);
      if (!j.is_discarded() && j.is_array()) return j;
    }
    pos = raw.find('[', pos + 1);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Field access

namespace {

enum class FieldState { absent, ok, bad_type };

FieldState read_int(const json& rec, const char* name, std::optional<long long>& out) {
  auto it = rec.find(name);
  if (it == rec.end() || it->is_null()) return FieldState::absent;
  if (it->is_number_integer()) {
    if (it->is_number_unsigned()) {
      const auto u = it->get<std::uint64_t>();
      out = u > static_cast<std::uint64_t>(1) << 62 ? (1LL << 62) : static_cast<long long>(u);
    } else {
      out = it->get<long long>();
    }
    return FieldState::ok;
  }
  if (it->is_number_float()) {
    const double d = it->get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 1e15) {
      out = static_cast<long long>(d);
      return FieldState::ok;
    }
  }
  return FieldState::bad_type;
}

FieldState read_string(const json& rec, const char* name, std::optional<std::string>& out) {
  auto it = rec.find(name);
  if (it == rec.end() || it->is_null()) return FieldState::absent;
  if (!it->is_string()) return FieldState::bad_type;
  out = it->get<std::string>();
  return FieldState::ok;
}

std::u32string_view slice(std::u32string_view text, std::size_t begin, std::size_t end) {
  return text.substr(begin, end - begin);
}

bool valid_interval(const std::optional<long long>& b, const std::optional<long long>& e, std::size_t limit) {
  return b && e && *b >= 0 && *b < *e && static_cast<unsigned long long>(*e) <= limit;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grounding

GroundResult ground_span(const SpanRecord& record, const Document& doc, std::u32string_view text) {
  GroundResult result;
  PredictedSpan& span = result.span;
  span.label = record.label;
  const std::size_t n = doc.tokens.size();
  const std::u32string claimed = record.text ? unicode::decode(*record.text) : std::u32string{};

  auto accept_tokens = [&](TokenSpan interval, Grounding g) {
    const CharSpan chars = token_extent(doc.tokens, interval);
    span.start_token = interval.begin;
    span.end_token = interval.end;
    span.start_char = chars.begin;
    span.end_char = chars.end;
    span.text = unicode::encode(slice(text, chars.begin, chars.end));
    span.grounding = g;
    result.status = g == Grounding::verbatim ? RecordStatus::accepted : RecordStatus::repaired;
  };

  // 1. Token interval.
  if (valid_interval(record.start_token, record.end_token, n)) {
    const TokenSpan interval{static_cast<std::size_t>(*record.start_token), static_cast<std::size_t>(*record.end_token)};
    const CharSpan chars = token_extent(doc.tokens, interval);
    if (!record.text || slice(text, chars.begin, chars.end) == claimed) {
      accept_tokens(interval, Grounding::verbatim);
      return result;
    }
  }

  // 2. Text search.
  if (record.text && !claimed.empty()) {
    std::size_t reference = 0;
    if (record.start_char && *record.start_char > 0) {
      reference = static_cast<std::size_t>(*record.start_char);
    } else if (!record.start_char && record.start_token && *record.start_token >= 0 &&
               static_cast<unsigned long long>(*record.start_token) < n) {
      reference = doc.tokens[static_cast<std::size_t>(*record.start_token)].start;
    }
    std::optional<TokenSpan> best;
    std::size_t best_start = 0;
    std::size_t best_distance = 0;
    for (std::size_t at = text.find(claimed); at != std::u32string_view::npos; at = text.find(claimed, at + 1)) {
      auto aligned = align_span(doc.tokens, text.size(), at, at + claimed.size());
      if (!aligned) continue;
      const std::size_t distance = at > reference ? at - reference : reference - at;
      if (!best || distance < best_distance) {
        best = aligned;
        best_start = at;
        best_distance = distance;
      }
    }
    if (best) {
      const bool same_chars = record.start_char && record.end_char &&
                              static_cast<long long>(best_start) == *record.start_char &&
                              static_cast<long long>(best_start + claimed.size()) == *record.end_char;
      accept_tokens(*best, same_chars ? Grounding::verbatim : Grounding::re_grounded);
      return result;
    }
  }

  // 3. Char interval alone.
  if (!record.text && valid_interval(record.start_char, record.end_char, text.size())) {
    if (auto aligned = align_span(doc.tokens, text.size(), static_cast<std::size_t>(*record.start_char),
                                  static_cast<std::size_t>(*record.end_char))) {
      accept_tokens(*aligned, Grounding::verbatim);
      return result;
    }
  }

  // 4. Rejected; keep what was claimed for auditing.
  auto clamp = [](const std::optional<long long>& v) {
    return v && *v > 0 ? static_cast<std::size_t>(*v) : std::size_t{0};
  };
  span.start_token = clamp(record.start_token);
  span.end_token = clamp(record.end_token);
  span.start_char = clamp(record.start_char);
  span.end_char = clamp(record.end_char);
  span.text = record.text.value_or("");
  span.grounding = Grounding::rejected;
  result.status = record.text ? RecordStatus::text_mismatch_rejected : RecordStatus::out_of_bounds;
  return result;
}

GroundResult ground_span(const SpanRecord& record, const Document& doc) {
  return ground_span(record, doc, unicode::decode(doc.text));
}

// ---------------------------------------------------------------------------
// Parsers

PredictionSet parse_span_output(const json& payload, const Document& doc, const LabelSet& labels) {
  PredictionSet pred;
  pred.document_id = doc.id;
  pred.granularity = Granularity::span_level;
  if (!payload.is_array()) {
    pred.no_payload = true;
    return pred;
  }
  const std::u32string text = unicode::decode(doc.text);
  std::set<std::pair<TokenSpan, std::string>> seen;

  for (const auto& rec : payload) {
    auto drop = [&](RecordStatus s, std::string attribute = {}) {
      pred.outcomes.push_back(RecordOutcome{s, std::move(attribute)});
    };
    if (!rec.is_object()) {
      drop(RecordStatus::schema_violation);
      continue;
    }
    SpanRecord r;
    std::optional<std::string> label;
    const FieldState states[] = {
        read_int(rec, "start_token", r.start_token), read_int(rec, "end_token", r.end_token),
        read_int(rec, "start_char", r.start_char),   read_int(rec, "end_char", r.end_char),
        read_string(rec, "text", r.text),            read_string(rec, "label", label)};
    if (std::find(std::begin(states), std::end(states), FieldState::bad_type) != std::end(states)) {
      drop(RecordStatus::schema_violation);
      continue;
    }
    if (!label) {
      drop(RecordStatus::missing_attribute, "label");
      continue;
    }
    if (!labels.contains(*label)) {
      drop(RecordStatus::unknown_label);
      continue;
    }
    const bool has_tokens = r.start_token && r.end_token;
    const bool has_chars = r.start_char && r.end_char;
    if (!has_tokens && !has_chars && !r.text) {
      drop(RecordStatus::missing_attribute, "text");
      continue;
    }
    r.label = std::move(*label);

    GroundResult g = ground_span(r, doc, text);
    if (g.span.grounding != Grounding::rejected && !seen.insert({g.span.interval(), g.span.label}).second) {
      drop(RecordStatus::duplicate);
      continue;
    }
    pred.outcomes.push_back(RecordOutcome{g.status, {}});
    pred.spans.push_back(std::move(g.span));
  }
  return pred;
}

PredictionSet parse_token_output(const json& payload, const Document& doc, const LabelSet& labels) {
  PredictionSet pred;
  pred.document_id = doc.id;
  pred.granularity = Granularity::token_level;
  if (!payload.is_array()) {
    pred.no_payload = true;
    return pred;
  }
  const std::size_t n = doc.tokens.size();
  std::set<std::size_t> seen;

  for (const auto& rec : payload) {
    auto drop = [&](RecordStatus s, std::string attribute = {}) {
      pred.outcomes.push_back(RecordOutcome{s, std::move(attribute)});
    };
    if (!rec.is_object()) {
      drop(RecordStatus::schema_violation);
      continue;
    }
    std::optional<long long> index;
    std::optional<std::string> text;
    std::optional<std::string> label;
    if (read_int(rec, "index", index) == FieldState::bad_type || read_string(rec, "text", text) == FieldState::bad_type ||
        read_string(rec, "label", label) == FieldState::bad_type) {
      drop(RecordStatus::schema_violation);
      continue;
    }
    if (!index) {
      drop(RecordStatus::missing_attribute, "index");
      continue;
    }
    if (!label) {
      drop(RecordStatus::missing_attribute, "label");
      continue;
    }
    if (*label != kOutsideLabel && !labels.contains(*label)) {
      drop(RecordStatus::unknown_label);
      continue;
    }
    if (*index < 0 || static_cast<unsigned long long>(*index) >= n) {
      drop(RecordStatus::out_of_bounds);
      continue;
    }
    PredictedToken tok{static_cast<std::size_t>(*index), text.value_or(doc.tokens[*index].text), *label,
                       Grounding::verbatim};
    RecordStatus status = RecordStatus::accepted;
    if (text && *text != doc.tokens[tok.index].text) {
      std::optional<std::size_t> match;
      bool unique = true;
      for (std::size_t i = 0; i < n; ++i) {
        if (doc.tokens[i].text != *text) continue;
        if (match) unique = false;
        match = i;
      }
      if (match && unique) {
        tok.index = *match;
        tok.grounding = Grounding::re_grounded;
        status = RecordStatus::repaired;
      } else {
        tok.grounding = Grounding::rejected;
        status = RecordStatus::text_mismatch_rejected;
      }
    }
    if (tok.grounding != Grounding::rejected && !seen.insert(tok.index).second) {
      drop(RecordStatus::duplicate);
      continue;
    }
    pred.outcomes.push_back(RecordOutcome{status, {}});
    pred.tokens.push_back(std::move(tok));
  }
  return pred;
}

PredictionSet parse_response(std::string_view raw, const Document& doc, const LabelSet& labels,
                             Granularity granularity) {
  auto payload = extract_payload(raw);
  PredictionSet pred;
  if (!payload) {
    pred.document_id = doc.id;
    pred.granularity = granularity;
    pred.no_payload = true;
  } else {
    pred = granularity == Granularity::span_level ? parse_span_output(*payload, doc, labels)
                                                  : parse_token_output(*payload, doc, labels);
  }
  pred.raw_text = std::string(raw);
  return pred;
}

// ---------------------------------------------------------------------------
// Example echo

PredictionSet detect_example_echo(PredictionSet pred, std::span<const Document> exemplars, const Document& target,
                                  double threshold) {
  for (const auto& ex : exemplars) {
    if (ex.id == target.id) throw Error("detect_example_echo: exemplar and target are the same document");
  }
  std::vector<const std::string*> surfaces;
  for (const auto& s : pred.spans) surfaces.push_back(&s.text);
  for (const auto& t : pred.tokens) surfaces.push_back(&t.text);

  std::size_t considered = 0;
  std::size_t echoed = 0;
  for (const std::string* s : surfaces) {
    if (s->empty()) continue;
    ++considered;
    const bool in_exemplar = std::any_of(exemplars.begin(), exemplars.end(),
                                         [&](const Document& ex) { return ex.text.find(*s) != std::string::npos; });
    if (in_exemplar && target.text.find(*s) == std::string::npos) ++echoed;
  }
  pred.echo_ratio = considered ? static_cast<double>(echoed) / static_cast<double>(considered) : 0.0;
  if (considered == 0 || pred.echo_ratio < threshold) return pred;

  pred.example_echo = true;
  // Records that reached grounding are reclassified, rejected ones included:
  // echoed text usually fails grounding first.
  for (auto& o : pred.outcomes) {
    if (o.status == RecordStatus::accepted || o.status == RecordStatus::repaired ||
        o.status == RecordStatus::out_of_bounds || o.status == RecordStatus::text_mismatch_rejected) {
      o = RecordOutcome{RecordStatus::example_echo, {}};
    }
  }
  for (auto& s : pred.spans) s.grounding = Grounding::rejected;
  for (auto& t : pred.tokens) t.grounding = Grounding::rejected;
  return pred;
}

}  // namespace fsner
