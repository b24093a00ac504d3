#include "fsprior/patchgen/segmentation.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "fsprior/common/atomic_file.hpp"
#include "fsprior/common/error.hpp"
#include "fsprior/imagecore/png_io.hpp"

namespace fsprior::patchgen {

std::vector<int> PatchSegmentation::patch_areas() const {
  std::vector<int> areas(static_cast<std::size_t>(patch_count), 0);
  for (auto l : labels) {
    if (l >= 0 && l < patch_count) ++areas[static_cast<std::size_t>(l)];
  }
  return areas;
}

int relabel_raster_order(std::span<std::int32_t> labels) {
  std::unordered_map<std::int32_t, std::int32_t> remap;
  for (auto& l : labels) {
    if (l < 0) continue;
    auto [it, inserted] = remap.try_emplace(l, static_cast<std::int32_t>(remap.size()));
    l = it->second;
  }
  return static_cast<int>(remap.size());
}

std::vector<std::int32_t> connected_components(std::span<const std::int32_t> labels, int width, int height,
                                               int connectivity) {
  if (labels.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("connected_components: label count does not match size");
  }
  if (connectivity != 4 && connectivity != 8) throw std::invalid_argument("connectivity must be 4 or 8");
  static constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};

  std::vector<std::int32_t> comp(labels.size(), -1);
  std::vector<int> stack;
  std::int32_t next = 0;
  for (std::size_t start = 0; start < labels.size(); ++start) {
    if (comp[start] >= 0) continue;
    comp[start] = next;
    stack.push_back(static_cast<int>(start));
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int x = p % width;
      const int y = p / width;
      for (int d = 0; d < connectivity; ++d) {
        const int nx = x + kDx[d];
        const int ny = y + kDy[d];
        if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
        const int q = ny * width + nx;
        if (comp[q] < 0 && labels[q] == labels[p]) {
          comp[q] = next;
          stack.push_back(q);
        }
      }
    }
    ++next;
  }
  return comp;
}

bool is_valid_partition(const PatchSegmentation& seg) {
  if (seg.width <= 0 || seg.height <= 0) return false;
  if (seg.labels.size() != static_cast<std::size_t>(seg.width) * seg.height) return false;
  std::vector<char> used(static_cast<std::size_t>(std::max(seg.patch_count, 0)), 0);
  for (auto l : seg.labels) {
    if (l < 0 || l >= seg.patch_count) return false;
    used[static_cast<std::size_t>(l)] = 1;
  }
  if (std::find(used.begin(), used.end(), 0) != used.end()) return false;
  const auto comps = connected_components(seg.labels, seg.width, seg.height, 4);
  const auto count = *std::max_element(comps.begin(), comps.end()) + 1;
  return count == seg.patch_count;
}

void save_segmentation(const std::filesystem::path& png_path, const std::filesystem::path& json_path,
                       const PatchSegmentation& seg, const std::string& params_json) {
  if (seg.patch_count > 65536) throw std::invalid_argument("too many patches for a 16-bit label map");
  imagecore::Grid<std::uint16_t> grid(seg.width, seg.height);
  for (std::size_t i = 0; i < seg.labels.size(); ++i) grid.values[i] = static_cast<std::uint16_t>(seg.labels[i]);

  nlohmann::ordered_json header;
  header["width"] = seg.width;
  header["height"] = seg.height;
  header["patch_count"] = seg.patch_count;
  header["params"] = nlohmann::ordered_json::parse(params_json);

  // Serialize both before touching the filesystem.
  const auto png_bytes = imagecore::encode_png(grid);
  const std::string text = header.dump(2) + "\n";
  write_file_atomic(png_path, png_bytes);
  write_file_atomic(json_path, text);
}

PatchSegmentation load_segmentation(const std::filesystem::path& png_path) {
  const auto grid = imagecore::decode_png_gray16(read_file_bytes(png_path));
  PatchSegmentation seg;
  seg.width = grid.width;
  seg.height = grid.height;
  seg.labels.assign(grid.values.begin(), grid.values.end());
  std::int32_t max_label = -1;
  for (auto l : seg.labels) max_label = std::max(max_label, l);
  seg.patch_count = max_label + 1;
  return seg;
}

}  // namespace fsprior::patchgen
