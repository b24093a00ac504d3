#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fsprior/encoder/tensor.hpp"
#include "fsprior/imagecore/image.hpp"

namespace fsprior::regionmap {

/// Per-cell score on the feature grid, values in [0,1].
struct RegionMap {
  int height = 0;
  int width = 0;
  std::vector<float> values;

  RegionMap() = default;
  RegionMap(int h, int w) : height(h), width(w), values(static_cast<std::size_t>(h) * w, 0.0f) {}

  float at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
  std::size_t cells() const { return values.size(); }
  bool operator==(const RegionMap&) const = default;
};

/// Thresholded RegionMap; width/height follow the BinaryMask convention.
using BinaryRegion = imagecore::BinaryMask;

inline constexpr double kNormalizeEpsilon = 1e-7;

/// x.p / (|x| |p|), accumulated in double; 0 when either vector is zero.
double cosine(std::span<const float> x, std::span<const float> p);

/// (v - min) / (max - min + eps). Throws std::invalid_argument on non-finite input.
RegionMap normalize_map(std::span<const double> raw, int height, int width);

/// Max over every prior cell of the cosine to each query cell.
std::vector<double> max_cosine(const encoder::FeatureMap& query, const encoder::FeatureMap& keys,
                               std::span<const std::uint8_t> key_mask = {});

/// Self-correspondence map. Throws std::invalid_argument when the grids or
/// channel counts differ.
RegionMap prior_region_map(const encoder::FeatureMap& xq, const encoder::FeatureMap& pq);

/// Nearest-neighbour downsampling of a pixel mask onto a feature grid.
imagecore::BinaryMask mask_to_grid(const imagecore::BinaryMask& mask, int height, int width);

/// Cross-correspondence map against the mask-filtered support cells. `ms`
/// may be at image resolution; it is resampled to the support grid first.
/// Throws std::invalid_argument("empty support mask") when nothing survives.
RegionMap guided_region_map(const encoder::FeatureMap& xq, const encoder::FeatureMap& xs,
                            const imagecore::BinaryMask& ms);

/// K-shot form: raw maps are combined by cell-wise max, then normalised once.
RegionMap guided_region_map(const encoder::FeatureMap& xq, std::span<const encoder::FeatureMap> xs,
                            std::span<const imagecore::BinaryMask> ms);

/// Cell is set iff value > alpha. alpha must lie in [0,1].
BinaryRegion threshold_region(const RegionMap& map, double alpha);

enum class Polarity { AsIs, InvertedPrior };

/// h x w x 2 tensor: channel 0 prior (or 1 - prior), channel 1 guided.
encoder::FeatureMap fuse_maps(const RegionMap& prior, const RegionMap& guided, Polarity polarity = Polarity::AsIs);

/// 8-bit grayscale, value * 255 rounded.
imagecore::Grid<std::uint8_t> to_gray8(const RegionMap& map);
void write_map_png(const std::filesystem::path& path, const RegionMap& map);
void save_map(const std::filesystem::path& path, const RegionMap& map);
RegionMap load_map(const std::filesystem::path& path);

}  // namespace fsprior::regionmap
