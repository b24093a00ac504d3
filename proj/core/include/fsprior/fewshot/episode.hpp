#pragma once

#include <cstdint>
#include <vector>

#include "fsprior/fewshot/dataset.hpp"
#include "fsprior/fewshot/folds.hpp"

namespace fsprior::fewshot {

enum class Phase { Train, Test };

/// K support samples plus one query, all containing class_id; masks are
/// binarised to that class.
struct Episode {
  int class_id = 0;
  std::vector<std::size_t> support_ids;
  std::size_t query_id = 0;
  std::vector<imagecore::RgbImage> support_images;
  std::vector<imagecore::BinaryMask> support_masks;
  imagecore::RgbImage query_image;
  imagecore::BinaryMask query_mask;

  int shots() const { return static_cast<int>(support_ids.size()); }
};

/// Picks a class uniformly from the phase's class set, then K+1 distinct
/// images of it (the last one drawn is the query). Pure function of the
/// arguments. Throws DataError naming the class when it has fewer than K+1
/// images, std::invalid_argument for K < 1 or an empty class set.
Episode sample_episode(const SegDataset& data, const FoldSplit& split, Phase phase, int shots, std::uint64_t seed);

}  // namespace fsprior::fewshot
