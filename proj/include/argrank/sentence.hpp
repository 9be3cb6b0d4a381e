#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace argrank {

// Half-open [start, end) range in code points.
struct CharRange {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - start; }
  bool contains(std::size_t pos) const noexcept { return pos >= start && pos < end; }
  bool operator==(const CharRange&) const = default;
};

/// Rule-based splitter: a sentence ends after `.`, `!` or `?` (plus any
/// closing quotes/brackets) followed by whitespace or end of text, unless the
/// word before the period is a guarded abbreviation. Line breaks always end a
/// sentence.
struct SentencePolicy {
  // ESSAY view: widen spans to covering sentences. When false the ESSAY view
  // degenerates to the bare spans.
  bool extend_to_sentence = true;
  std::vector<std::string> abbreviations = {
      "e.g", "i.e", "etc", "vs", "mr", "mrs", "ms", "dr", "prof", "st",
      "jr", "sr", "no", "u.s", "u.k", "approx", "cf", "fig", "a.m", "p.m"};
};

std::vector<CharRange> sentence_ranges(std::u32string_view text, const SentencePolicy& policy);

/// Smallest run of consecutive sentences covering [start, end).
CharRange covering_range(const std::vector<CharRange>& sentences, CharRange span);

}  // namespace argrank
