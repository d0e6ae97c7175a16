#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsner/tokenizer.hpp"

namespace fsner {

inline constexpr std::string_view kOutsideLabel = "O";

struct LabelInfo {
  std::string name;
  std::string description;
};

/// Closed, ordered tagset. Names are unique, non-empty, whitespace-free and
/// never "O".
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<LabelInfo> labels);

  /// Spatial, Person, Misc, Nominal, Relation, Latlong.
  static LabelSet defaults();

  const std::vector<LabelInfo>& labels() const { return labels_; }
  std::vector<std::string> names() const;
  bool contains(std::string_view name) const;
  const std::string& description(std::string_view name) const;
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }

  friend bool operator==(const LabelSet&, const LabelSet&);

 private:
  std::vector<LabelInfo> labels_;
};

LabelSet load_label_set(const std::filesystem::path& path);
LabelSet label_set_from_json(const nlohmann::json& j);
nlohmann::ordered_json label_set_to_json(const LabelSet& labels);

struct GoldSpan {
  std::size_t start_token = 0;
  std::size_t end_token = 0;  // exclusive
  std::string label;
  int depth = 0;

  TokenSpan interval() const { return {start_token, end_token}; }
  friend bool operator==(const GoldSpan&, const GoldSpan&) = default;
};

struct Document {
  std::string id;
  std::string text;
  std::vector<Token> tokens;
  std::vector<std::string> token_labels;
  std::vector<GoldSpan> spans;

  /// True when token_labels covers every token. Raw input documents built
  /// for extraction carry no gold.
  bool has_gold() const { return !tokens.empty() && token_labels.size() == tokens.size(); }

  friend bool operator==(const Document&, const Document&) = default;
};

/// Builds an unannotated document from raw text with the rule-based tokenizer.
Document document_from_text(std::string id, std::string text);

enum class Split { train, test, other };

std::string_view to_string(Split split);
Split split_from_string(std::string_view name);

struct Corpus {
  std::vector<Document> documents;
  LabelSet label_set;
  Split split = Split::other;

  const Document* find(std::string_view id) const;
};

/// Returns every invariant violation found in `doc`; empty when valid.
std::vector<std::string> validate_document(const Document& doc, const LabelSet& labels);

/// Parses one native-format record. Throws CorpusError naming the document id
/// and the offending field.
Document document_from_json(const nlohmann::json& j, const LabelSet& labels);
nlohmann::ordered_json document_to_json(const Document& doc);

/// Loads the native line-delimited format. All line errors are collected and
/// reported together in one CorpusError.
Corpus load_corpus(const std::filesystem::path& path, const LabelSet& labels,
                   Split split = Split::other);
Corpus parse_corpus(std::string_view content, const LabelSet& labels, Split split = Split::other);

std::string serialize_corpus(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Keeps only depth-0 spans. Throws CorpusError if two depth-0 spans overlap.
Document flatten_nested(const Document& doc);

/// First document, in corpus order, whose depth-0 spans cover every label.
/// With `override_id`, that document is returned instead (it must exist).
const Document& select_exemplar(const Corpus& corpus,
                                const std::optional<std::string>& override_id = std::nullopt);

/// Mapping profile that turns an external line-delimited dataset into the
/// native schema. See importer.cpp for the accepted keys.
struct ImportProfile {
  std::string id_field = "id";
  std::string text_field = "text";
  std::string tokens_field = "tokens";
  std::string token_text_field = "text";
  std::string token_start_field = "start";
  std::string token_end_field = "end";
  std::string labels_field = "token_labels";
  std::string spans_field = "spans";
  std::string span_start_field = "start_token";
  std::string span_end_field = "end_token";
  std::string span_label_field = "label";
  std::string span_depth_field = "depth";
  bool bio_labels = false;
  std::map<std::string, std::string> label_map;
};

ImportProfile load_import_profile(const std::filesystem::path& path);
Corpus import_corpus(std::string_view content, const ImportProfile& profile,
                     const LabelSet& labels, Split split = Split::other);

}  // namespace fsner
