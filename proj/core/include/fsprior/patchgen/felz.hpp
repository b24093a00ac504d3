#pragma once

#include <cstdint>
#include <vector>

#include "fsprior/imagecore/image.hpp"
#include "fsprior/patchgen/segmentation.hpp"

namespace fsprior::patchgen {

enum class EdgeWeight {
  EuclideanRgb,  ///< |I_i - I_j| over the RGB vector
  Intensity,     ///< |Y_i - Y_j| with Y the Rec.601 luma
};

struct FelzParams {
  double scale = 200.0;         ///< k in the threshold tau(C) = k / |C|
  int min_component_size = 20;
  int connectivity = 4;         ///< 4 or 8
  EdgeWeight weight = EdgeWeight::EuclideanRgb;

  void validate() const;
};

struct GraphEdge {
  float weight = 0.0f;
  std::int32_t a = 0;  ///< pixel index, a < b
  std::int32_t b = 0;
};

/// Pixel graph edges sorted ascending by (weight, a, b).
std::vector<GraphEdge> build_sorted_edges(const imagecore::RgbImage& img, const FelzParams& p);

/// Graph-based segmentation: process edges in ascending order and merge the
/// two components when w <= min(Int(C1) + k/|C1|, Int(C2) + k/|C2|), with
/// Int(C) the largest edge weight merged inside C. A second pass over the same
/// edge order merges components smaller than min_component_size. In
/// 8-connected mode patches are finally split into 4-connected pieces.
PatchSegmentation felz_segment(const imagecore::RgbImage& img, const FelzParams& p);

}  // namespace fsprior::patchgen
