#include "argrank/sentence.hpp"

#include <algorithm>
#include <cwctype>

#include "argrank/util.hpp"

namespace argrank {
namespace {

bool is_space(char32_t c) { return c == U' ' || c == U'\t' || c == U'\r' || c == U'\n' || c == 0xA0; }
bool is_terminal(char32_t c) { return c == U'.' || c == U'!' || c == U'?'; }
bool is_closer(char32_t c) {
  return c == U'"' || c == U'\'' || c == U')' || c == U']' || c == 0x201D || c == 0x2019;
}

std::string lower_ascii(std::u32string_view w) {
  std::string out;
  for (char32_t c : w) {
    out += utf8_encode(std::u32string(1, c < 0x80 ? static_cast<char32_t>(std::tolower(static_cast<int>(c))) : c));
  }
  return out;
}

bool guarded_abbreviation(std::u32string_view text, std::size_t period,
                          const SentencePolicy& policy) {
  std::size_t b = period;
  while (b > 0 && !is_space(text[b - 1]) && text[b - 1] != U'(' && text[b - 1] != U'"') --b;
  const std::u32string_view word = text.substr(b, period - b);
  if (word.empty()) return false;
  // single-letter initials ("J. Smith")
  if (word.size() == 1 && is_upper(word[0])) return true;
  const std::string lw = lower_ascii(word);
  return std::find(policy.abbreviations.begin(), policy.abbreviations.end(), lw) !=
         policy.abbreviations.end();
}

}  // namespace

std::vector<CharRange> sentence_ranges(std::u32string_view text, const SentencePolicy& policy) {
  std::vector<CharRange> out;
  const std::size_t n = text.size();
  std::size_t i = 0;
  auto emit = [&](std::size_t s, std::size_t e) {
    while (s < e && is_space(text[s])) ++s;
    while (e > s && is_space(text[e - 1])) --e;
    if (s < e) out.push_back({s, e});
  };
  std::size_t start = 0;
  while (i < n) {
    const char32_t c = text[i];
    if (c == U'\n') {
      emit(start, i);
      start = i + 1;
      ++i;
      continue;
    }
    if (is_terminal(c)) {
      std::size_t j = i + 1;
      while (j < n && (is_terminal(text[j]) || is_closer(text[j]))) ++j;
      const bool at_break = j >= n || is_space(text[j]);
      if (at_break && !(c == U'.' && guarded_abbreviation(text, i, policy))) {
        emit(start, j);
        start = j;
      }
      i = j;
      continue;
    }
    ++i;
  }
  emit(start, n);
  return out;
}

CharRange covering_range(const std::vector<CharRange>& sentences, CharRange span) {
  CharRange out = span;
  for (const auto& s : sentences) {
    if (s.end <= span.start || s.start >= span.end) continue;
    out.start = std::min(out.start, s.start);
    out.end = std::max(out.end, s.end);
  }
  return out;
}

}  // namespace argrank
