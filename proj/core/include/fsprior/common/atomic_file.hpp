#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace fsprior {

/// Writes `bytes` to `path` through a temporary sibling file and a rename, so
/// readers never observe a truncated file. Throws IoError on failure.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

/// Reads a whole file. Throws IoError when it cannot be opened.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace fsprior
