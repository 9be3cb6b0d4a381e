#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "argrank/corpus.hpp"
#include "argrank/sentence.hpp"

namespace argrank {

enum class SpanTag : std::uint8_t { target = 0, connector = 1, source = 2 };
inline constexpr std::size_t kSpanTagCount = 3;

std::string_view to_string(SpanTag tag);
SpanTag parse_span_tag(std::string_view s);

struct ConnectorPair {
  std::string abbreviation;  // "M/H"
  std::string code;          // CLI spelling, "MH"
  std::string support_marker;
  std::string attack_marker;
  bool linguistic = true;
};

/// The four linguistic pairs (A/A, A/D, M/H, Y/N) plus the NO-DISC "+"/"-" pair.
const std::vector<ConnectorPair>& connector_registry();
/// Accepts either the abbreviation ("M/H") or the code ("MH"). Throws ConfigInvalid.
const ConnectorPair& find_connector(std::string_view name);
/// Ensemble members: every linguistic pair, in registry order.
std::vector<std::string> linguistic_connector_codes();

struct Token {
  std::string text;
  CharRange range;  // code points into the owning text

  bool operator==(const Token&) const = default;
};

/// Whitespace-plus-punctuation tokenizer. Apostrophes and hyphens between
/// word characters stay inside the word; every other punctuation mark is a
/// token of its own.
std::vector<Token> tokenize(std::string_view text);

enum class UnitPosition { leading_target, trailing_source };

/// Casing and punctuation normalization of one unit for its slot in the
/// reconstruction. Throws EmptyUnit when nothing remains.
std::string normalize_unit(std::string_view text, UnitPosition position, bool keep_case = false);

enum class Polarity { support_marked, attack_marked };

struct Reconstruction {
  std::string text;
  std::vector<Token> tokens;
  std::vector<SpanTag> tags;  // one per token
  Polarity polarity = Polarity::support_marked;
  // target, connector, source; they partition the text
  std::array<CharRange, kSpanTagCount> ranges{};

  bool operator==(const Reconstruction&) const = default;
};

/// "<Target>. <Marker> <source>." with per-token tags.
Reconstruction reconstruct(std::string_view target, std::string_view marker,
                           std::string_view source, Polarity polarity);

struct MinimalPair {
  std::string rel_id;
  Label gold = Label::support;
  std::string connector_abbrev;
  Reconstruction plus;   // marker agrees with gold
  Reconstruction minus;  // marker contradicts gold

  const Reconstruction& support_marked() const { return gold == Label::support ? plus : minus; }
  const Reconstruction& attack_marked() const { return gold == Label::support ? minus : plus; }
  bool operator==(const MinimalPair&) const = default;
};

MinimalPair build_minimal_pair(const ViewInstance& instance, const ConnectorPair& pair);
std::vector<MinimalPair> build_minimal_pairs(const CorpusView& view, const ConnectorPair& pair);

std::string pairs_to_jsonl(const std::vector<MinimalPair>& pairs);
std::vector<MinimalPair> pairs_from_jsonl(std::string_view jsonl);

}  // namespace argrank
