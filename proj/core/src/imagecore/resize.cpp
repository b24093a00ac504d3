#include "fsprior/imagecore/resize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fsprior::imagecore {

RgbImage crop_resize(const RgbImage& src, const Box& box, int out_w, int out_h) {
  if (box.width <= 0 || box.height <= 0 || box.x < 0 || box.y < 0 ||
      box.x + box.width > src.width() || box.y + box.height > src.height()) {
    throw std::invalid_argument("crop box outside image");
  }
  if (out_w <= 0 || out_h <= 0) throw std::invalid_argument("output size must be positive");

  RgbImage out(out_w, out_h);
  if (box.width == out_w && box.height == out_h) {
    for (int y = 0; y < out_h; ++y) {
      const auto* row = src.pixel(box.x, box.y + y);
      std::copy(row, row + 3 * out_w, out.pixel(0, y));
    }
    return out;
  }

  const double sx = static_cast<double>(box.width) / out_w;
  const double sy = static_cast<double>(box.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, box.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, box.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, box.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, box.width - 1);
      const double wx = fx - x0;
      const auto* p00 = src.pixel(box.x + x0, box.y + y0);
      const auto* p01 = src.pixel(box.x + x1, box.y + y0);
      const auto* p10 = src.pixel(box.x + x0, box.y + y1);
      const auto* p11 = src.pixel(box.x + x1, box.y + y1);
      auto* o = out.pixel(x, y);
      for (int c = 0; c < 3; ++c) {
        const double top = p00[c] + (p01[c] - p00[c]) * wx;
        const double bottom = p10[c] + (p11[c] - p10[c]) * wx;
        o[c] = static_cast<std::uint8_t>(std::clamp(std::lround(top + (bottom - top) * wy), 0L, 255L));
      }
    }
  }
  return out;
}

RgbImage flip_horizontal(const RgbImage& src) {
  RgbImage out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      const auto* p = src.pixel(src.width() - 1 - x, y);
      std::copy(p, p + 3, out.pixel(x, y));
    }
  }
  return out;
}

BinaryMask resize_nearest(const BinaryMask& mask, int width, int height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("output size must be positive");
  BinaryMask out(width, height);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(mask.height() - 1, static_cast<int>((y + 0.5) * mask.height() / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(mask.width() - 1, static_cast<int>((x + 0.5) * mask.width() / width));
      out.set(x, y, mask.get(sx, sy));
    }
  }
  return out;
}

}  // namespace fsprior::imagecore
