#include "fsner/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "fsner/error.hpp"
#include "fsner/unicode.hpp"

namespace fsner {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// LabelSet

LabelSet::LabelSet(std::vector<LabelInfo> labels) : labels_(std::move(labels)) {
  std::set<std::string_view> seen;
  for (const auto& l : labels_) {
    if (l.name.empty()) throw CorpusError("label set: empty label name");
    if (l.name == kOutsideLabel) throw CorpusError("label set: \"O\" is reserved for outside tokens");
    for (char32_t cp : unicode::decode(l.name)) {
      if (unicode::is_space(cp)) throw CorpusError("label set: label \"" + l.name + "\" contains whitespace");
    }
    if (!seen.insert(l.name).second) throw CorpusError("label set: duplicate label \"" + l.name + "\"");
  }
}

LabelSet LabelSet::defaults() {
  return LabelSet({
      {"Spatial", "a named place: city, region, country, river, mountain or other geographic feature"},
      {"Person", "a named person, including saints, kings and authors"},
      {"Misc", "any other named entity: peoples, works, institutions, events"},
      {"Nominal", "a common noun phrase designating a place or geographic feature (e.g. \"ville\", \"riviere\")"},
      {"Relation", "a spatial relation expression linking entities (e.g. \"pres de\", \"au nord de\")"},
      {"Latlong", "a geographic coordinate expression (latitude or longitude)"},
  });
}

std::vector<std::string> LabelSet::names() const {
  std::vector<std::string> out;
  out.reserve(labels_.size());
  for (const auto& l : labels_) out.push_back(l.name);
  return out;
}

bool LabelSet::contains(std::string_view name) const {
  return std::any_of(labels_.begin(), labels_.end(), [&](const LabelInfo& l) { return l.name == name; });
}

const std::string& LabelSet::description(std::string_view name) const {
  for (const auto& l : labels_) {
    if (l.name == name) return l.description;
  }
  throw CorpusError("label set: unknown label \"" + std::string(name) + "\"");
}

bool operator==(const LabelSet& a, const LabelSet& b) {
  return std::equal(a.labels_.begin(), a.labels_.end(), b.labels_.begin(), b.labels_.end(),
                    [](const LabelInfo& x, const LabelInfo& y) {
                      return x.name == y.name && x.description == y.description;
                    });
}

LabelSet label_set_from_json(const json& j) {
  if (!j.is_object() || !j.contains("labels") || !j["labels"].is_array()) {
    throw CorpusError("label set: expected an object with a \"labels\" array");
  }
  std::vector<LabelInfo> labels;
  for (const auto& item : j["labels"]) {
    if (item.is_string()) {
      labels.push_back({item.get<std::string>(), ""});
    } else if (item.is_object() && item.contains("name") && item["name"].is_string()) {
      labels.push_back({item["name"].get<std::string>(), item.value("description", std::string{})});
    } else {
      throw CorpusError("label set: each label must be a string or {name, description}");
    }
  }
  return LabelSet(std::move(labels));
}

ordered_json label_set_to_json(const LabelSet& labels) {
  ordered_json arr = ordered_json::array();
  for (const auto& l : labels.labels()) {
    arr.push_back(ordered_json{{"name", l.name}, {"description", l.description}});
  }
  return ordered_json{{"labels", std::move(arr)}};
}

LabelSet load_label_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("label set: cannot open " + path.string());
  try {
    return label_set_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw CorpusError("label set: " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Document

Document document_from_text(std::string id, std::string text) {
  Document doc;
  doc.id = std::move(id);
  doc.tokens = tokenize(text);
  doc.text = std::move(text);
  return doc;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::other: return "other";
  }
  return "other";
}

Split split_from_string(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "test") return Split::test;
  if (name == "other") return Split::other;
  throw CorpusError("unknown split \"" + std::string(name) + "\"");
}

const Document* Corpus::find(std::string_view id) const {
  for (const auto& d : documents) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

std::vector<std::string> validate_document(const Document& doc, const LabelSet& labels) {
  std::vector<std::string> problems;
  const std::u32string text = unicode::decode(doc.text);
  for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
    const Token& t = doc.tokens[i];
    const std::string where = "tokens[" + std::to_string(i) + "]";
    if (t.index != i) problems.push_back(where + ": index " + std::to_string(t.index) + " != position");
    if (t.start >= t.end) {
      problems.push_back(where + ": start must be < end");
      continue;
    }
    if (t.end > text.size()) {
      problems.push_back(where + ": end " + std::to_string(t.end) + " beyond text length " +
                         std::to_string(text.size()));
      continue;
    }
    if (unicode::encode(std::u32string_view(text).substr(t.start, t.end - t.start)) != t.text) {
      problems.push_back(where + ": text \"" + t.text + "\" does not match text[" + std::to_string(t.start) +
                         ":" + std::to_string(t.end) + "]");
    }
    if (i > 0 && doc.tokens[i - 1].end > t.start) {
      problems.push_back(where + ": overlaps or precedes the previous token");
    }
  }
  if (doc.token_labels.size() != doc.tokens.size()) {
    problems.push_back("token_labels: length " + std::to_string(doc.token_labels.size()) +
                       " != token count " + std::to_string(doc.tokens.size()));
  }
  for (std::size_t i = 0; i < doc.token_labels.size(); ++i) {
    const auto& l = doc.token_labels[i];
    if (l != kOutsideLabel && !labels.contains(l)) {
      problems.push_back("token_labels[" + std::to_string(i) + "]: label \"" + l + "\" not in label set");
    }
  }
  for (std::size_t s = 0; s < doc.spans.size(); ++s) {
    const GoldSpan& span = doc.spans[s];
    const std::string where = "spans[" + std::to_string(s) + "]";
    if (span.start_token >= span.end_token) problems.push_back(where + ": start_token must be < end_token");
    if (span.end_token > doc.tokens.size()) {
      problems.push_back(where + ": end_token " + std::to_string(span.end_token) + " > token count " +
                         std::to_string(doc.tokens.size()));
    }
    if (!labels.contains(span.label)) problems.push_back(where + ": label \"" + span.label + "\" not in label set");
    if (span.depth < 0) problems.push_back(where + ": negative depth");
    if (span.depth == 0 && span.start_token < span.end_token && span.end_token <= doc.token_labels.size()) {
      for (std::size_t t = span.start_token; t < span.end_token; ++t) {
        if (doc.token_labels[t] != span.label) {
          problems.push_back(where + ": token " + std::to_string(t) + " labelled \"" + doc.token_labels[t] +
                             "\" inside a depth-0 " + span.label + " span");
          break;
        }
      }
    }
  }
  return problems;
}

namespace {

template <typename T>
T field(const json& j, const char* name, const std::string& where) {
  if (!j.contains(name)) throw CorpusError(where + ": missing field \"" + name + "\"");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw CorpusError(where + ": field \"" + name + "\" has the wrong type");
  }
}

}  // namespace

Document document_from_json(const json& j, const LabelSet& labels) {
  if (!j.is_object()) throw CorpusError("document: expected a JSON object");
  Document doc;
  doc.id = field<std::string>(j, "id", "document");
  const std::string where = "document \"" + doc.id + "\"";
  doc.text = field<std::string>(j, "text", where);

  const json& tokens = j.contains("tokens") ? j["tokens"] : json();
  if (!tokens.is_array()) throw CorpusError(where + ": field \"tokens\" must be an array");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string tw = where + ": tokens[" + std::to_string(i) + "]";
    if (!tokens[i].is_object()) throw CorpusError(tw + ": expected an object");
    doc.tokens.push_back(Token{i, field<std::string>(tokens[i], "text", tw), field<std::size_t>(tokens[i], "start", tw),
                               field<std::size_t>(tokens[i], "end", tw)});
  }
  doc.token_labels = field<std::vector<std::string>>(j, "token_labels", where);

  const json& spans = j.contains("spans") ? j["spans"] : json::array();
  if (!spans.is_array()) throw CorpusError(where + ": field \"spans\" must be an array");
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const std::string sw = where + ": spans[" + std::to_string(i) + "]";
    if (!spans[i].is_object()) throw CorpusError(sw + ": expected an object");
    GoldSpan s;
    s.start_token = field<std::size_t>(spans[i], "start_token", sw);
    s.end_token = field<std::size_t>(spans[i], "end_token", sw);
    s.label = field<std::string>(spans[i], "label", sw);
    s.depth = spans[i].contains("depth") ? field<int>(spans[i], "depth", sw) : 0;
    doc.spans.push_back(std::move(s));
  }

  auto problems = validate_document(doc, labels);
  if (!problems.empty()) {
    std::string msg = where + ": " + problems.front();
    for (std::size_t i = 1; i < problems.size(); ++i) msg += "; " + problems[i];
    throw CorpusError(msg);
  }
  return doc;
}

ordered_json document_to_json(const Document& doc) {
  ordered_json tokens = ordered_json::array();
  for (const auto& t : doc.tokens) {
    tokens.push_back(ordered_json{{"text", t.text}, {"start", t.start}, {"end", t.end}});
  }
  ordered_json spans = ordered_json::array();
  for (const auto& s : doc.spans) {
    spans.push_back(ordered_json{
        {"start_token", s.start_token}, {"end_token", s.end_token}, {"label", s.label}, {"depth", s.depth}});
  }
  return ordered_json{{"id", doc.id},
                      {"text", doc.text},
                      {"tokens", std::move(tokens)},
                      {"token_labels", doc.token_labels},
                      {"spans", std::move(spans)}};
}

Corpus parse_corpus(std::string_view content, const LabelSet& labels, Split split) {
  Corpus corpus;
  corpus.label_set = labels;
  corpus.split = split;
  std::vector<std::string> errors;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      json j = json::parse(line);
      Document doc = document_from_json(j, labels);
      if (!ids.insert(doc.id).second) throw CorpusError("document \"" + doc.id + "\": duplicate id");
      corpus.documents.push_back(std::move(doc));
    } catch (const json::parse_error& e) {
      errors.push_back("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    } catch (const CorpusError& e) {
      errors.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg = "corpus has " + std::to_string(errors.size()) + " invalid line(s):";
    for (const auto& e : errors) msg += "\n  " + e;
    throw CorpusError(msg);
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const LabelSet& labels, Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("corpus: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_corpus(buf.str(), labels, split);
  } catch (const CorpusError& e) {
    throw CorpusError(path.string() + ": " + e.what());
  }
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& doc : corpus.documents) {
    out += document_to_json(doc).dump(-1, ' ', false, json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("corpus: cannot write " + path.string());
  out << serialize_corpus(corpus);
}

// ---------------------------------------------------------------------------

Document flatten_nested(const Document& doc) {
  Document out = doc;
  out.spans.clear();
  for (const auto& s : doc.spans) {
    if (s.depth == 0) out.spans.push_back(s);
  }
  std::vector<const GoldSpan*> sorted;
  for (const auto& s : out.spans) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(),
            [](const GoldSpan* a, const GoldSpan* b) { return a->start_token < b->start_token; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->start_token < sorted[i - 1]->end_token) {
      throw CorpusError("document \"" + doc.id + "\": depth-0 spans [" + std::to_string(sorted[i - 1]->start_token) +
                        "," + std::to_string(sorted[i - 1]->end_token) + ") and [" +
                        std::to_string(sorted[i]->start_token) + "," + std::to_string(sorted[i]->end_token) +
                        ") overlap");
    }
  }
  return out;
}

namespace {

std::vector<std::string> missing_labels(const Document& doc, const LabelSet& labels) {
  std::vector<std::string> missing;
  for (const auto& l : labels.labels()) {
    bool found = std::any_of(doc.spans.begin(), doc.spans.end(),
                             [&](const GoldSpan& s) { return s.depth == 0 && s.label == l.name; });
    if (!found) missing.push_back(l.name);
  }
  return missing;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

}  // namespace

const Document& select_exemplar(const Corpus& corpus, const std::optional<std::string>& override_id) {
  if (override_id) {
    const Document* doc = corpus.find(*override_id);
    if (!doc) throw CorpusError("exemplar: no document with id \"" + *override_id + "\"");
    return *doc;
  }
  if (corpus.documents.empty()) throw CorpusError("exemplar: corpus is empty");

  std::set<std::string> covered;
  const Document* closest = nullptr;
  std::size_t closest_missing = 0;
  for (const auto& doc : corpus.documents) {
    auto missing = missing_labels(doc, corpus.label_set);
    if (missing.empty()) return doc;
    if (!closest || missing.size() < closest_missing) {
      closest = &doc;
      closest_missing = missing.size();
    }
    for (const auto& s : doc.spans) {
      if (s.depth == 0) covered.insert(s.label);
    }
  }
  std::vector<std::string> uncovered;
  for (const auto& l : corpus.label_set.labels()) {
    if (!covered.count(l.name)) uncovered.push_back(l.name);
  }
  if (!uncovered.empty()) {
    throw CorpusError("exemplar: no document contains labels: " + join(uncovered));
  }
  throw CorpusError("exemplar: no single document covers every label; closest is \"" + closest->id +
                    "\", missing: " + join(missing_labels(*closest, corpus.label_set)));
}

}  // namespace fsner
