#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fsprior {

/// Binary container shared by checkpoints and tensor dumps:
///
///   "QGN1" | u32 version | u32 header length | header JSON bytes | f32 blob
///
/// All integers and floats are little-endian. The blob runs to end of file.
struct Container {
  static constexpr std::uint32_t kVersion = 1;

  std::string header_json;
  std::vector<float> values;
};

std::vector<std::uint8_t> encode_container(std::string_view header_json, std::span<const float> values);

/// Throws IoError on a bad magic, unsupported version or truncated payload.
Container decode_container(std::span<const std::uint8_t> bytes);

void save_container(const std::filesystem::path& path, std::string_view header_json,
                    std::span<const float> values);
Container load_container(const std::filesystem::path& path);

}  // namespace fsprior
