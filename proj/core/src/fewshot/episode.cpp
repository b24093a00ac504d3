#include "fsprior/fewshot/episode.hpp"

#include <stdexcept>
#include <string>

#include "fsprior/common/error.hpp"
#include "fsprior/common/rng.hpp"

namespace fsprior::fewshot {

Episode sample_episode(const SegDataset& data, const FoldSplit& split, Phase phase, int shots, std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("sample_episode: shots must be >= 1");
  const auto& classes = phase == Phase::Train ? split.train_classes : split.test_classes;
  if (classes.empty()) throw std::invalid_argument("sample_episode: empty class set");

  Rng rng(seed);
  Episode ep;
  ep.class_id = classes[rng.below(classes.size())];
  std::vector<std::size_t> pool = data.images_of(ep.class_id);
  const std::size_t need = static_cast<std::size_t>(shots) + 1;
  if (pool.size() < need) {
    throw DataError("class " + std::to_string(ep.class_id) + " (" + data.class_names()[ep.class_id] + ") has " +
                    std::to_string(pool.size()) + " images, episode needs " + std::to_string(need));
  }
  // Partial Fisher-Yates: the first `need` slots become a uniform draw without replacement.
  for (std::size_t i = 0; i < need; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);

  ep.support_ids.assign(pool.begin(), pool.begin() + shots);
  ep.query_id = pool[need - 1];
  for (auto id : ep.support_ids) {
    ep.support_images.push_back(data[id].image);
    ep.support_masks.push_back(data[id].mask_for(ep.class_id));
  }
  ep.query_image = data[ep.query_id].image;
  ep.query_mask = data[ep.query_id].mask_for(ep.class_id);
  return ep;
}

}  // namespace fsprior::fewshot
