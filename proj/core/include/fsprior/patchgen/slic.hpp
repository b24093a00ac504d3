#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fsprior/imagecore/image.hpp"
#include "fsprior/patchgen/segmentation.hpp"

namespace fsprior::patchgen {

struct SlicParams {
  int k_clusters = 16;               ///< requested number of clusters K
  double compactness = 10.0;         ///< m, weight of the spatial term
  double residual_threshold = 1.0;   ///< stop once summed centre motion <= this
  int max_iterations = 10;
  int recenter_window = 3;           ///< n for the n x n lowest-gradient move

  void validate() const;
};

/// A cluster centre in labxy space. x/y are pixel-index coordinates.
struct SlicCenter {
  double l = 0, a = 0, b = 0, x = 0, y = 0;
};

struct SlicResult {
  PatchSegmentation segmentation;
  std::vector<SlicCenter> centers;  ///< centres after the last update
  int iterations = 0;
  double residual = 0.0;            ///< E of the last iteration
};

/// Grid interval S = sqrt(N / K).
double slic_interval(int width, int height, int k_clusters);

/// Number of seed columns and rows. Starts from round(W/S) x round(H/S) and
/// adjusts so that cols * rows <= K, splitting the longer cell side first.
std::pair<int, int> slic_grid(int width, int height, int k_clusters);

/// Seeds on the regular grid, each moved to the lowest-gradient pixel of its
/// recenter window when that is strictly lower than the seed pixel.
std::vector<SlicCenter> slic_initial_centers(const imagecore::LabImage& img, const SlicParams& p);

/// D_s = D_lab + D_xy / S * m.
double slic_distance(const SlicCenter& c, const float* lab, int x, int y, double interval, double compactness);

/// One assignment step: each pixel goes to the nearest centre (lowest D_s,
/// earliest centre on ties) among those whose 2S x 2S window covers it;
/// uncovered pixels get -1.
std::vector<std::int32_t> slic_assign(const imagecore::LabImage& img, const std::vector<SlicCenter>& centers,
                                      double interval, double compactness);

/// Merges unassigned pixels (-1) and every non-largest fragment of a label
/// into the largest adjacent cluster, then renumbers in raster order.
PatchSegmentation enforce_connectivity(std::vector<std::int32_t> labels, int width, int height);

SlicResult slic_cluster(const imagecore::LabImage& img, const SlicParams& p);

inline PatchSegmentation slic_segment(const imagecore::LabImage& img, const SlicParams& p) {
  return slic_cluster(img, p).segmentation;
}

}  // namespace fsprior::patchgen
