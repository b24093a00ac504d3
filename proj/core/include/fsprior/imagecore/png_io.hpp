#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fsprior/imagecore/image.hpp"

namespace fsprior::imagecore {

// Decoders accept any PNG colour type and convert it to the requested form.
// They throw IoError for unreadable or corrupt data.

RgbImage decode_png_rgb(std::span<const std::uint8_t> bytes);
Grid<std::uint8_t> decode_png_gray8(std::span<const std::uint8_t> bytes);
Grid<std::uint16_t> decode_png_gray16(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_png(const RgbImage& img);
std::vector<std::uint8_t> encode_png(const Grid<std::uint8_t>& gray);
std::vector<std::uint8_t> encode_png(const Grid<std::uint16_t>& gray);

RgbImage read_png_rgb(const std::filesystem::path& path);

/// Masks are stored as 8-bit grayscale, 0 for background and 255 for
/// foreground; on read any non-zero value counts as foreground.
BinaryMask read_png_mask(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const RgbImage& img);
void write_png(const std::filesystem::path& path, const BinaryMask& mask);
void write_png(const std::filesystem::path& path, const Grid<std::uint8_t>& gray);
void write_png(const std::filesystem::path& path, const Grid<std::uint16_t>& gray);

}  // namespace fsprior::imagecore
