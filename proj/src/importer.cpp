// Maps external line-delimited datasets onto the native corpus schema.
//
// Profile file (JSON), every key optional:
//   {"fields": {"id": ..., "text": ..., "tokens": ..., "token_labels": ..., "spans": ...},
//    "token_fields": {"text": ..., "start": ..., "end": ...},
//    "span_fields": {"start_token": ..., "end_token": ..., "label": ..., "depth": ...},
//    "bio": true|false,
//    "label_map": {"NP-Spatial": "Spatial", "NC-Spatial": "Nominal", "Date": "O", ...}}
//
// Tokens may be objects with offsets or bare strings; bare strings are located
// left to right in the text (or joined with single spaces when the record has
// no text). Without a spans field, spans are rebuilt from the token labels.

#include <fstream>

#include "fsner/corpus.hpp"
#include "fsner/error.hpp"
#include "fsner/unicode.hpp"

namespace fsner {

using json = nlohmann::json;

namespace {

void read_key(const json& obj, const char* key, std::string& target) {
  if (obj.contains(key)) target = obj.at(key).get<std::string>();
}

struct TagParts {
  char prefix = 0;  // 'B', 'I', ... or 0 when plain
  std::string label;
};

TagParts split_tag(const std::string& tag, bool bio) {
  if (bio && tag.size() > 2 && tag[1] == '-' && std::string_view("BIESLU").find(tag[0]) != std::string_view::npos) {
    return {tag[0], tag.substr(2)};
  }
  return {0, tag};
}

std::string map_label(const ImportProfile& p, const std::string& label) {
  if (label.empty() || label == kOutsideLabel) return std::string(kOutsideLabel);
  auto it = p.label_map.find(label);
  return it == p.label_map.end() ? label : it->second;
}

std::vector<GoldSpan> spans_from_tags(const std::vector<TagParts>& tags, const std::vector<std::string>& labels) {
  std::vector<GoldSpan> spans;
  std::size_t i = 0;
  while (i < labels.size()) {
    if (labels[i] == kOutsideLabel) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < labels.size() && labels[j] == labels[i] && tags[j].prefix != 'B' && tags[j].prefix != 'S' &&
           tags[j].prefix != 'U' && tags[j - 1].prefix != 'E' && tags[j - 1].prefix != 'L') {
      ++j;
    }
    spans.push_back(GoldSpan{i, j, labels[i], 0});
    i = j;
  }
  return spans;
}

Document import_record(const json& rec, const ImportProfile& p, const LabelSet& labels) {
  if (!rec.is_object()) throw CorpusError("expected a JSON object");
  Document doc;
  const json& id = rec.at(p.id_field);
  doc.id = id.is_string() ? id.get<std::string>() : id.dump();

  const json& toks = rec.at(p.tokens_field);
  if (!toks.is_array()) throw CorpusError("document \"" + doc.id + "\": tokens field must be an array");
  const bool have_text = rec.contains(p.text_field);
  if (have_text) {
    doc.text = rec.at(p.text_field).get<std::string>();
  } else {
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (i) doc.text += ' ';
      doc.text += toks[i].is_string() ? toks[i].get<std::string>() : toks[i].at(p.token_text_field).get<std::string>();
    }
  }
  const std::u32string text = unicode::decode(doc.text);
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const json& t = toks[i];
    if (t.is_object() && t.contains(p.token_start_field) && t.contains(p.token_end_field)) {
      doc.tokens.push_back(Token{i, t.at(p.token_text_field).get<std::string>(), t.at(p.token_start_field).get<std::size_t>(),
                                 t.at(p.token_end_field).get<std::size_t>()});
      continue;
    }
    std::string surface = t.is_string() ? t.get<std::string>() : t.at(p.token_text_field).get<std::string>();
    std::u32string needle = unicode::decode(surface);
    std::size_t at = needle.empty() ? std::u32string::npos : text.find(needle, cursor);
    if (at == std::u32string::npos) {
      throw CorpusError("document \"" + doc.id + "\": token " + std::to_string(i) + " \"" + surface +
                        "\" not found in text after offset " + std::to_string(cursor));
    }
    doc.tokens.push_back(Token{i, std::move(surface), at, at + needle.size()});
    cursor = at + needle.size();
  }

  std::vector<TagParts> tags;
  if (rec.contains(p.labels_field)) {
    for (const auto& raw : rec.at(p.labels_field)) tags.push_back(split_tag(raw.get<std::string>(), p.bio_labels));
  } else {
    tags.assign(doc.tokens.size(), TagParts{0, std::string(kOutsideLabel)});
  }
  for (const auto& tag : tags) doc.token_labels.push_back(map_label(p, tag.label));

  if (rec.contains(p.spans_field)) {
    for (const auto& s : rec.at(p.spans_field)) {
      std::string label = map_label(p, s.at(p.span_label_field).get<std::string>());
      if (label == kOutsideLabel) continue;
      doc.spans.push_back(GoldSpan{s.at(p.span_start_field).get<std::size_t>(), s.at(p.span_end_field).get<std::size_t>(),
                                   std::move(label), s.value(p.span_depth_field, 0)});
    }
  } else {
    doc.spans = spans_from_tags(tags, doc.token_labels);
  }

  auto problems = validate_document(doc, labels);
  if (!problems.empty()) throw CorpusError("document \"" + doc.id + "\": " + problems.front());
  return doc;
}

}  // namespace

ImportProfile load_import_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("import profile: cannot open " + path.string());
  ImportProfile p;
  try {
    json j = json::parse(in);
    if (j.contains("fields")) {
      const json& f = j["fields"];
      read_key(f, "id", p.id_field);
      read_key(f, "text", p.text_field);
      read_key(f, "tokens", p.tokens_field);
      read_key(f, "token_labels", p.labels_field);
      read_key(f, "spans", p.spans_field);
    }
    if (j.contains("token_fields")) {
      const json& f = j["token_fields"];
      read_key(f, "text", p.token_text_field);
      read_key(f, "start", p.token_start_field);
      read_key(f, "end", p.token_end_field);
    }
    if (j.contains("span_fields")) {
      const json& f = j["span_fields"];
      read_key(f, "start_token", p.span_start_field);
      read_key(f, "end_token", p.span_end_field);
      read_key(f, "label", p.span_label_field);
      read_key(f, "depth", p.span_depth_field);
    }
    p.bio_labels = j.value("bio", false);
    if (j.contains("label_map")) p.label_map = j["label_map"].get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw CorpusError("import profile: " + path.string() + ": " + e.what());
  }
  return p;
}

Corpus import_corpus(std::string_view content, const ImportProfile& profile, const LabelSet& labels, Split split) {
  Corpus corpus;
  corpus.label_set = labels;
  corpus.split = split;
  std::vector<std::string> errors;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      Document doc = import_record(json::parse(line), profile, labels);
      if (corpus.find(doc.id)) throw CorpusError("document \"" + doc.id + "\": duplicate id");
      corpus.documents.push_back(std::move(doc));
    } catch (const std::exception& e) {
      errors.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg = "import failed on " + std::to_string(errors.size()) + " line(s):";
    for (const auto& e : errors) msg += "\n  " + e;
    throw CorpusError(msg);
  }
  return corpus;
}

}  // namespace fsner
