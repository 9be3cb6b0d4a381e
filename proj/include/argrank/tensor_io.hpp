#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace argrank {

// Little-endian float32 container shared by the embedding cache and model
// checkpoints:
//
//   "PLRK1" | u32 rows | u32 cols | rows*cols f32 (row-major) | rows tag bytes | u64 checksum
//
// The checksum is FNV-1a 64 over every preceding byte of the record.
inline constexpr std::string_view kContainerMagic = "PLRK1";

struct TensorRecord {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<float> values;        // rows * cols
  std::vector<std::uint8_t> tags;   // rows

  bool operator==(const TensorRecord&) const = default;
};

std::string encode_record(const TensorRecord& record);

/// Decodes one record starting at `offset` and advances it. Throws
/// CorruptEntry on a bad magic, truncation or checksum failure.
TensorRecord decode_record(std::string_view bytes, std::size_t& offset);

}  // namespace argrank
