#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "argrank/sentence.hpp"

namespace argrank {

enum class UnitKind { major_claim, claim, premise };
enum class Label { support, attack };
enum class ViewMode { essay, essay_content };

std::string_view to_string(UnitKind kind);
std::string_view to_string(Label label);
std::string_view to_string(ViewMode mode);
Label parse_label(std::string_view s);
ViewMode parse_view_mode(std::string_view s);

/// Argumentative unit; offsets are code-point offsets into the essay text.
struct EauSpan {
  std::string unit_id;
  UnitKind kind = UnitKind::premise;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;

  bool operator==(const EauSpan&) const = default;
};

/// `source` supports or attacks `target`.
struct RelationInstance {
  std::string rel_id;
  std::string source;
  std::string target;
  Label label = Label::support;
  std::string doc_id;

  bool operator==(const RelationInstance&) const = default;
};

/// A-line attribute (stance of a claim). Kept as metadata only.
struct UnitAttribute {
  std::string attr_id;
  std::string name;
  std::string unit_id;
  std::string value;

  bool operator==(const UnitAttribute&) const = default;
};

struct Document {
  std::string doc_id;
  std::string text;
  std::vector<EauSpan> units;
  std::vector<RelationInstance> relations;
  std::vector<UnitAttribute> attributes;
  // '#' annotator-note lines, verbatim
  std::vector<std::string> notes;

  const EauSpan* find_unit(std::string_view unit_id) const;
  bool operator==(const Document&) const = default;
};

/// Parses brat standoff annotations against the raw essay text.
///
/// Grammar (tab separated):
///   T<n>  <Kind> <start> <end>  <surface>      Kind in {MajorClaim, Claim, Premise}
///   R<n>  <supports|attacks> Arg1:<T> Arg2:<T>  Arg1 is the source, Arg2 the target
///   A<n>  <Name> <T> [<Value>]
///   #<n>  <free text>
/// Throws MalformedLine, OffsetMismatch, DanglingReference.
Document parse_standoff(std::string_view ann_content, std::string_view txt_content,
                        std::string doc_id);

/// Inverse of parse_standoff (annotation side only).
std::string serialize_standoff(const Document& doc);

/// Loads every `<id>.ann` / `<id>.txt` pair in `dir`, sorted by id.
std::vector<Document> load_corpus_dir(const std::string& dir);

/// Reads the corpus' train/test table. Accepts `;` or `,` separated rows,
/// optionally quoted, with an optional header. Returns doc_id -> partition
/// (upper-cased, e.g. "TRAIN" / "TEST").
std::map<std::string, std::string> read_split_table(const std::string& path);
std::set<std::string> test_documents(const std::map<std::string, std::string>& table);

// Globally unique relation key: "<doc_id>:<rel_id>".
std::string relation_key(std::string_view doc_id, std::string_view rel_id);

struct ViewInstance {
  std::string rel_id;  // relation_key()
  std::string doc_id;
  std::string source_text;
  std::string target_text;
  Label label = Label::support;
  // Leading word of the source is a proper noun / "I" / acronym in this essay.
  bool source_keep_case = false;

  bool operator==(const ViewInstance&) const = default;
};

struct CorpusView {
  ViewMode mode = ViewMode::essay_content;
  std::vector<ViewInstance> instances;
};

/// One instance per relation. ESSAY_CONTENT uses the bare span surfaces;
/// ESSAY widens each span to its covering sentence(s) under `policy`.
CorpusView build_view(const std::vector<Document>& docs, ViewMode mode,
                      const SentencePolicy& policy = {});

std::string view_to_jsonl(const CorpusView& view);
CorpusView view_from_jsonl(std::string_view jsonl);

struct DataSplit {
  std::vector<std::string> train;  // relation keys
  std::vector<std::string> dev;
  std::vector<std::string> test;
  std::vector<std::string> train_docs;
  std::vector<std::string> dev_docs;
  std::vector<std::string> test_docs;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kDefaultDevCount = 1149;

/// Test = relations of `official_test_docs`. Dev is filled with whole training
/// documents, drawn in seeded random order, so that its relation count lands
/// as close to `dev_count` as document atomicity allows. Throws
/// SplitInfeasible when dev_count exceeds the training relations.
DataSplit make_split(const std::vector<Document>& docs,
                     const std::set<std::string>& official_test_docs,
                     std::size_t dev_count, std::uint64_t seed);

std::string split_to_json(const DataSplit& split);
DataSplit split_from_json(std::string_view json);

struct CorpusStats {
  std::size_t essays = 0;
  std::size_t units = 0;
  std::size_t relations = 0;
  std::size_t support = 0;
  std::size_t attack = 0;
  double support_fraction = 0.0;
};

CorpusStats corpus_stats(const std::vector<Document>& docs);

// Per-essay words that occur capitalized away from a sentence start.
std::set<std::string> mid_sentence_capitalized(const Document& doc,
                                               const SentencePolicy& policy = {});

}  // namespace argrank
