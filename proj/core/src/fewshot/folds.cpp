#include "fsprior/fewshot/folds.hpp"

#include <stdexcept>
#include <string>

namespace fsprior::fewshot {

std::vector<FoldSplit> make_folds(int num_classes, int num_folds) {
  if (num_folds < 1 || num_classes < num_folds || num_classes % num_folds != 0) {
    throw std::invalid_argument("make_folds: " + std::to_string(num_classes) + " classes cannot be split into " +
                                std::to_string(num_folds) + " equal folds");
  }
  const int per = num_classes / num_folds;
  std::vector<FoldSplit> folds(static_cast<std::size_t>(num_folds));
  for (int f = 0; f < num_folds; ++f) {
    auto& s = folds[static_cast<std::size_t>(f)];
    s.fold = f;
    for (int c = 0; c < num_classes; ++c) {
      (c / per == f ? s.test_classes : s.train_classes).push_back(c);
    }
  }
  return folds;
}

}  // namespace fsprior::fewshot
