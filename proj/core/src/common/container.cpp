#include "fsprior/common/container.hpp"

#include <bit>
#include <cstring>

#include "fsprior/common/atomic_file.hpp"
#include "fsprior/common/error.hpp"

namespace fsprior {

namespace {

constexpr char kMagic[4] = {'Q', 'G', 'N', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::vector<std::uint8_t> encode_container(std::string_view header_json, std::span<const float> values) {
  std::vector<std::uint8_t> out;
  out.reserve(12 + header_json.size() + 4 * values.size());
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, Container::kVersion);
  put_u32(out, static_cast<std::uint32_t>(header_json.size()));
  out.insert(out.end(), header_json.begin(), header_json.end());
  for (float f : values) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

Container decode_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw IoError("not a QGN1 container");
  }
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != Container::kVersion) {
    throw IoError("unsupported container version " + std::to_string(version));
  }
  const std::uint32_t header_len = get_u32(bytes.data() + 8);
  if (bytes.size() < 12 + static_cast<std::size_t>(header_len)) throw IoError("truncated container header");
  const std::size_t blob = bytes.size() - 12 - header_len;
  if (blob % 4 != 0) throw IoError("truncated container payload");

  Container c;
  c.header_json.assign(reinterpret_cast<const char*>(bytes.data() + 12), header_len);
  c.values.resize(blob / 4);
  const std::uint8_t* p = bytes.data() + 12 + header_len;
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    c.values[i] = std::bit_cast<float>(get_u32(p + 4 * i));
  }
  return c;
}

void save_container(const std::filesystem::path& path, std::string_view header_json,
                    std::span<const float> values) {
  write_file_atomic(path, encode_container(header_json, values));
}

Container load_container(const std::filesystem::path& path) {
  return decode_container(read_file_bytes(path));
}

}  // namespace fsprior
