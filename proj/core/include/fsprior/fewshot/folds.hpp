#pragma once

#include <vector>

namespace fsprior::fewshot {

struct FoldSplit {
  int fold = 0;
  std::vector<int> train_classes;
  std::vector<int> test_classes;

  bool operator==(const FoldSplit&) const = default;
};

/// Fold i tests on the contiguous block [i*n/f, (i+1)*n/f) and trains on the
/// rest. Throws std::invalid_argument unless 1 <= f <= n and f divides n.
std::vector<FoldSplit> make_folds(int num_classes, int num_folds);

}  // namespace fsprior::fewshot
