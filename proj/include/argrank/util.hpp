#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace argrank {

// UTF-8 <-> code points. Invalid bytes decode to U+FFFD so offsets stay total.
std::u32string utf8_decode(std::string_view text);
std::string utf8_encode(std::u32string_view text);
std::size_t utf8_length(std::string_view text);

// Locale-independent simple case mapping for ASCII, Latin-1, Latin
// Extended-A, basic Greek and Cyrillic. Other code points map to themselves.
char32_t to_upper(char32_t c);
char32_t to_lower(char32_t c);
inline bool is_upper(char32_t c) { return to_lower(c) != c; }
inline bool is_lower(char32_t c) { return to_upper(c) != c; }

// 64-bit FNV-1a.
class Fnv1a64 {
 public:
  void update(const void* data, std::size_t size);
  void update(std::string_view s) { update(s.data(), s.size()); }
  std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

// Seeded generator with implementation-independent draws, so shuffles and
// initializations match across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // uniform in [0, 1) with 53 random bits
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // uniform integer in [0, bound), bound > 0
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::string read_file(const std::string& path);
// Writes through a temporary sibling and renames, so readers never observe a
// partial file.
void write_file_atomic(const std::string& path, std::string_view contents);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);

}  // namespace argrank
