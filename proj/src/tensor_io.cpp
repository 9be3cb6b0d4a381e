#include "argrank/tensor_io.hpp"

#include <bit>

#include "argrank/errors.hpp"
#include "argrank/util.hpp"

namespace argrank {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(std::string_view bytes, std::size_t at, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
  return v;
}

}  // namespace

std::string encode_record(const TensorRecord& record) {
  const std::size_t count = static_cast<std::size_t>(record.rows) * record.cols;
  if (record.values.size() != count || record.tags.size() != record.rows)
    throw ShapeMismatch("tensor record payload does not match its header");
  std::string out;
  out.reserve(kContainerMagic.size() + 8 + 4 * count + record.rows + 8);
  out.append(kContainerMagic);
  put_u32(out, record.rows);
  put_u32(out, record.cols);
  for (float f : record.values) put_u32(out, std::bit_cast<std::uint32_t>(f));
  for (std::uint8_t t : record.tags) out.push_back(static_cast<char>(t));
  put_u64(out, fnv1a64(out));
  return out;
}

TensorRecord decode_record(std::string_view bytes, std::size_t& offset) {
  const std::size_t base = offset;
  const std::size_t header = kContainerMagic.size() + 8;
  if (bytes.size() < base + header) throw CorruptEntry("truncated header");
  if (bytes.substr(base, kContainerMagic.size()) != kContainerMagic) throw CorruptEntry("bad magic");
  TensorRecord r;
  r.rows = static_cast<std::uint32_t>(get_le(bytes, base + 5, 4));
  r.cols = static_cast<std::uint32_t>(get_le(bytes, base + 9, 4));
  const std::size_t count = static_cast<std::size_t>(r.rows) * r.cols;
  const std::size_t total = header + 4 * count + r.rows + 8;
  if (bytes.size() - base < total) throw CorruptEntry("truncated payload");
  const std::uint64_t stored = get_le(bytes, base + total - 8, 8);
  if (fnv1a64(bytes.substr(base, total - 8)) != stored) throw CorruptEntry("checksum mismatch");
  r.values.resize(count);
  std::size_t at = base + header;
  for (std::size_t i = 0; i < count; ++i, at += 4)
    r.values[i] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(bytes, at, 4)));
  r.tags.assign(bytes.begin() + static_cast<std::ptrdiff_t>(at),
                bytes.begin() + static_cast<std::ptrdiff_t>(at + r.rows));
  offset = base + total;
  return r;
}

}  // namespace argrank
