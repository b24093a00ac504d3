#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fsprior::patchgen {

/// Partition of an image into patches. `labels` is row-major, one id per
/// pixel, with ids in [0, patch_count) all in use.
struct PatchSegmentation {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> labels;
  int patch_count = 0;

  std::int32_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  std::vector<int> patch_areas() const;

  bool operator==(const PatchSegmentation&) const = default;
};

/// Renumbers labels to 0..k-1 in order of first appearance in raster order.
/// Negative labels are left untouched. Returns k.
int relabel_raster_order(std::span<std::int32_t> labels);

/// Labels 4-connected (or 8-connected) runs of equal values. Component ids
/// follow raster order of each component's first pixel.
std::vector<std::int32_t> connected_components(std::span<const std::int32_t> labels, int width, int height,
                                               int connectivity = 4);

/// True when every label in [0, patch_count) is used, nothing lies outside
/// that range, and every patch is 4-connected.
bool is_valid_partition(const PatchSegmentation& seg);

/// Writes the label map as a 16-bit grayscale PNG plus a JSON sidecar holding
/// {"width","height","patch_count","params"}; `params_json` must be a JSON
/// value. Both writes are atomic.
void save_segmentation(const std::filesystem::path& png_path, const std::filesystem::path& json_path,
                       const PatchSegmentation& seg, const std::string& params_json);

PatchSegmentation load_segmentation(const std::filesystem::path& png_path);

}  // namespace fsprior::patchgen
