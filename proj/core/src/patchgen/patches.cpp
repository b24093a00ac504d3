#include "fsprior/patchgen/patches.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "fsprior/imagecore/resize.hpp"

namespace fsprior::patchgen {

std::vector<PatchCrop> extract_patches(const imagecore::RgbImage& img, const PatchSegmentation& seg, int min_area,
                                       int out_size) {
  if (seg.width != img.width() || seg.height != img.height()) {
    throw std::invalid_argument("extract_patches: segmentation does not match image size");
  }
  if (out_size <= 0) throw std::invalid_argument("extract_patches: out_size must be positive");

  struct Extent {
    int x0 = std::numeric_limits<int>::max(), y0 = std::numeric_limits<int>::max();
    int x1 = -1, y1 = -1, area = 0;
  };
  std::vector<Extent> extents(static_cast<std::size_t>(seg.patch_count));
  for (int y = 0; y < seg.height; ++y) {
    for (int x = 0; x < seg.width; ++x) {
      auto& e = extents[static_cast<std::size_t>(seg.at(x, y))];
      e.x0 = std::min(e.x0, x);
      e.y0 = std::min(e.y0, y);
      e.x1 = std::max(e.x1, x);
      e.y1 = std::max(e.y1, y);
      ++e.area;
    }
  }

  std::vector<PatchCrop> crops;
  for (int id = 0; id < seg.patch_count; ++id) {
    const auto& e = extents[static_cast<std::size_t>(id)];
    if (e.area == 0 || e.area < min_area) continue;
    PatchCrop crop;
    crop.patch_id = id;
    crop.area = e.area;
    crop.box = imagecore::Box{e.x0, e.y0, e.x1 - e.x0 + 1, e.y1 - e.y0 + 1};
    crop.mask = imagecore::BinaryMask(crop.box.width, crop.box.height);
    for (int y = 0; y < crop.box.height; ++y) {
      for (int x = 0; x < crop.box.width; ++x) {
        crop.mask.set(x, y, seg.at(crop.box.x + x, crop.box.y + y) == id);
      }
    }
    crop.pixels = imagecore::crop_resize(img, crop.box, out_size, out_size);
    crops.push_back(std::move(crop));
  }
  return crops;
}

}  // namespace fsprior::patchgen
