#pragma once

#include <vector>

#include "fsprior/imagecore/image.hpp"
#include "fsprior/patchgen/segmentation.hpp"

namespace fsprior::patchgen {

/// One patch cut out of its source image. `box` tightly encloses the patch,
/// `mask` (box-sized) flags the patch's own pixels inside the box, and
/// `pixels` is the box content resized to out_size x out_size. Context pixels
/// inside the box are kept.
struct PatchCrop {
  int patch_id = 0;
  int area = 0;
  imagecore::Box box;
  imagecore::BinaryMask mask;
  imagecore::RgbImage pixels;
};

/// One crop per patch whose area is at least `min_area`, in patch-id order.
/// Returns an empty list when no patch qualifies.
std::vector<PatchCrop> extract_patches(const imagecore::RgbImage& img, const PatchSegmentation& seg, int min_area,
                                       int out_size);

}  // namespace fsprior::patchgen
