#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace fsprior::imagecore {

/// Row-major three-channel pixel grid. `RgbImage` holds 8-bit sRGB values,
/// `LabImage` holds CIE-Lab floats (L in [0,100], a/b roughly [-128,127]).
template <typename T>
class Image3 {
 public:
  using value_type = T;
  static constexpr int kChannels = 3;

  Image3() = default;
  Image3(int width, int height) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw std::invalid_argument("image size must be non-negative");
    data_.assign(static_cast<std::size_t>(width) * height * kChannels, T{});
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  T& at(int x, int y, int c) { return data_[index(x, y) + c]; }
  const T& at(int x, int y, int c) const { return data_[index(x, y) + c]; }

  /// Pointer to the three channels of pixel (x, y).
  T* pixel(int x, int y) { return data_.data() + index(x, y); }
  const T* pixel(int x, int y) const { return data_.data() + index(x, y); }

  bool operator==(const Image3&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using RgbImage = Image3<std::uint8_t>;
using LabImage = Image3<float>;

/// Single-channel row-major grid.
template <typename T>
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<T> values;

  Grid() = default;
  Grid(int w, int h, T fill = T{}) : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  T& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  const T& at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return values.size(); }

  bool operator==(const Grid&) const = default;
};

/// Axis-aligned pixel rectangle.
struct Box {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  int area() const { return width * height; }
  bool contains(int px, int py) const {
    return px >= x && py >= y && px < x + width && py < y + height;
  }
  bool operator==(const Box&) const = default;
};

/// Per-pixel {0,1} mask.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height) : cells_(width, height, 0) {}

  int width() const { return cells_.width; }
  int height() const { return cells_.height; }
  std::size_t size() const { return cells_.size(); }

  bool get(int x, int y) const { return cells_.at(x, y) != 0; }
  void set(int x, int y, bool v) { cells_.at(x, y) = v ? 1 : 0; }
  bool get(std::size_t i) const { return cells_.values[i] != 0; }
  void set(std::size_t i, bool v) { cells_.values[i] = v ? 1 : 0; }

  std::span<const std::uint8_t> values() const { return cells_.values; }
  std::size_t count() const;

  bool operator==(const BinaryMask&) const = default;

 private:
  Grid<std::uint8_t> cells_;
};

inline std::size_t BinaryMask::count() const {
  std::size_t n = 0;
  for (auto v : cells_.values) n += v;
  return n;
}

/// Nearest-neighbour resampling of a mask onto a `width` x `height` grid,
/// sampling source pixel centres.
BinaryMask resize_nearest(const BinaryMask& mask, int width, int height);

}  // namespace fsprior::imagecore
