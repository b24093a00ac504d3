#pragma once

#include "fsprior/imagecore/image.hpp"

namespace fsprior::imagecore {

/// Bilinear resampling of `box` (in `src`) onto an out_w x out_h image,
/// sampling pixel centres with edge clamping. A box equal to the output size
/// is copied verbatim.
RgbImage crop_resize(const RgbImage& src, const Box& box, int out_w, int out_h);

inline RgbImage resize_bilinear(const RgbImage& src, int out_w, int out_h) {
  return crop_resize(src, Box{0, 0, src.width(), src.height()}, out_w, out_h);
}

RgbImage flip_horizontal(const RgbImage& src);

}  // namespace fsprior::imagecore
