#include "fsprior/imagecore/png_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstring>
#include <string>

#include "fsprior/common/atomic_file.hpp"
#include "fsprior/common/error.hpp"

namespace fsprior::imagecore {

namespace {

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void read_callback(png_structp png, png_bytep out, png_size_t count) {
  auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cursor->offset + count > cursor->bytes.size()) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, cursor->bytes.data() + cursor->offset, count);
  cursor->offset += count;
}

void write_callback(png_structp png, png_bytep data, png_size_t count) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + count);
}

void flush_callback(png_structp) {}

enum class Target { Rgb8, Gray8, Gray16 };

struct Decoded {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rows;  // packed rows in the target layout
};

// Returns false (with `error` set) instead of throwing across libpng's longjmp.
bool decode_impl(std::span<const std::uint8_t> bytes, Target target, Decoded& out, std::string& error) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    error = "not a PNG file";
    return false;
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) {
    error = "png_create_read_struct failed";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    error = "png_create_info_struct failed";
    return false;
  }
  ReadCursor cursor{bytes, 0};
  std::vector<png_bytep> row_ptrs;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    error = "corrupt PNG data";
    return false;
  }
  png_set_read_fn(png, &cursor, read_callback);
  png_read_info(png, info);

  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);

  const bool is_gray = (color_type & PNG_COLOR_MASK_COLOR) == 0;
  switch (target) {
    case Target::Rgb8:
      if (bit_depth == 16) png_set_strip_16(png);
      if (is_gray) png_set_gray_to_rgb(png);
      break;
    case Target::Gray8:
      if (bit_depth == 16) png_set_strip_16(png);
      if (!is_gray) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
      break;
    case Target::Gray16:
      if (!is_gray) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
      if (bit_depth < 16) png_set_expand_16(png);
      png_set_swap(png);  // host little-endian rows
      break;
  }
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  out.rows.assign(rowbytes * out.height, 0);
  row_ptrs.resize(out.height);
  for (int y = 0; y < out.height; ++y) row_ptrs[y] = out.rows.data() + rowbytes * y;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

Decoded decode_or_throw(std::span<const std::uint8_t> bytes, Target target) {
  Decoded d;
  std::string error;
  if (!decode_impl(bytes, target, d, error)) throw IoError(error);
  return d;
}

bool encode_impl(int width, int height, int color_type, int bit_depth, const std::uint8_t* rows,
                 std::size_t rowbytes, std::vector<std::uint8_t>& out) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  std::vector<png_bytep> row_ptrs(height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &out, write_callback, flush_callback);
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  for (int y = 0; y < height; ++y) row_ptrs[y] = const_cast<std::uint8_t*>(rows + rowbytes * y);
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

std::vector<std::uint8_t> encode_or_throw(int width, int height, int color_type, int bit_depth,
                                          const std::uint8_t* rows, std::size_t rowbytes) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("cannot encode an empty image");
  std::vector<std::uint8_t> out;
  if (!encode_impl(width, height, color_type, bit_depth, rows, rowbytes, out)) {
    throw IoError("PNG encoding failed");
  }
  return out;
}

}  // namespace

RgbImage decode_png_rgb(std::span<const std::uint8_t> bytes) {
  const Decoded d = decode_or_throw(bytes, Target::Rgb8);
  RgbImage img(d.width, d.height);
  std::memcpy(img.data().data(), d.rows.data(), img.data().size());
  return img;
}

Grid<std::uint8_t> decode_png_gray8(std::span<const std::uint8_t> bytes) {
  Decoded d = decode_or_throw(bytes, Target::Gray8);
  Grid<std::uint8_t> g(d.width, d.height);
  g.values = std::move(d.rows);
  return g;
}

Grid<std::uint16_t> decode_png_gray16(std::span<const std::uint8_t> bytes) {
  const Decoded d = decode_or_throw(bytes, Target::Gray16);
  Grid<std::uint16_t> g(d.width, d.height);
  std::memcpy(g.values.data(), d.rows.data(), g.values.size() * 2);
  return g;
}

std::vector<std::uint8_t> encode_png(const RgbImage& img) {
  return encode_or_throw(img.width(), img.height(), PNG_COLOR_TYPE_RGB, 8, img.data().data(),
                         static_cast<std::size_t>(img.width()) * 3);
}

std::vector<std::uint8_t> encode_png(const Grid<std::uint8_t>& gray) {
  return encode_or_throw(gray.width, gray.height, PNG_COLOR_TYPE_GRAY, 8, gray.values.data(),
                         static_cast<std::size_t>(gray.width));
}

std::vector<std::uint8_t> encode_png(const Grid<std::uint16_t>& gray) {
  return encode_or_throw(gray.width, gray.height, PNG_COLOR_TYPE_GRAY, 16,
                         reinterpret_cast<const std::uint8_t*>(gray.values.data()),
                         static_cast<std::size_t>(gray.width) * 2);
}

RgbImage read_png_rgb(const std::filesystem::path& path) {
  try {
    return decode_png_rgb(read_file_bytes(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

BinaryMask read_png_mask(const std::filesystem::path& path) {
  Grid<std::uint8_t> g;
  try {
    g = decode_png_gray8(read_file_bytes(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  BinaryMask mask(g.width, g.height);
  for (std::size_t i = 0; i < g.values.size(); ++i) mask.set(i, g.values[i] != 0);
  return mask;
}

void write_png(const std::filesystem::path& path, const RgbImage& img) {
  write_file_atomic(path, encode_png(img));
}

void write_png(const std::filesystem::path& path, const BinaryMask& mask) {
  Grid<std::uint8_t> g(mask.width(), mask.height());
  for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = mask.get(i) ? 255 : 0;
  write_file_atomic(path, encode_png(g));
}

void write_png(const std::filesystem::path& path, const Grid<std::uint8_t>& gray) {
  write_file_atomic(path, encode_png(gray));
}

void write_png(const std::filesystem::path& path, const Grid<std::uint16_t>& gray) {
  write_file_atomic(path, encode_png(gray));
}

}  // namespace fsprior::imagecore
