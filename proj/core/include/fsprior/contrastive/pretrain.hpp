#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fsprior/contrastive/info_nce.hpp"
#include "fsprior/contrastive/queue.hpp"
#include "fsprior/encoder/encoder.hpp"
#include "fsprior/encoder/sgd.hpp"
#include "fsprior/imagecore/augment.hpp"
#include "fsprior/imagecore/image.hpp"
#include "fsprior/patchgen/felz.hpp"
#include "fsprior/patchgen/slic.hpp"

namespace fsprior::contrastive {

enum class PatchMethod { Slic, Felz };

struct ContrastiveConfig {
  double temperature = 0.07;
  std::size_t queue_capacity = 4096;  ///< used for both the image and the patch queue
  int batch_size = 16;
  int epochs = 1;
  LossWeights weights;
  double momentum = 0.999;  ///< key-encoder coefficient mu

  PatchMethod patch_method = PatchMethod::Slic;
  patchgen::SlicParams slic;
  /// When positive, SLIC's K is set per image to round(N / target) (at
  /// least 1), overriding slic.k_clusters.
  int slic_target_patch_area = 32 * 32;
  patchgen::FelzParams felz;
  int min_patch_area = 64;
  int patch_size = 32;
  int patches_per_image = 4;

  imagecore::AugSpec augment;  ///< seed field is ignored; views are seeded per step
  encoder::SgdConfig sgd;
  encoder::EncoderArchitecture arch = encoder::EncoderArchitecture::standard();

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double global_loss = 0.0;
  double local_loss = 0.0;
  double total_loss = 0.0;
  double positive_similarity = 0.0;
  double negative_similarity = 0.0;
  int skipped_local = 0;  ///< images that produced no usable patch
};

struct PretrainStats {
  std::vector<EpochStats> epochs;

  /// CSV with header epoch,l_global,l_local,l_total,pos_sim,neg_sim.
  std::string to_csv() const;
};

/// Momentum-contrast pretraining of the prior extractor with the image-level
/// and patch-level losses. One step per mini-batch:
///  - each image gives two augmented views (query / key);
///  - the query view is segmented into patches, up to patches_per_image crops
///    are sampled and each crop gets two augmented views;
///  - queries go through the trained encoder, keys through the momentum
///    encoder; the weighted sum of mean image loss and mean patch loss is
///    back-propagated through the query encoder only;
///  - SGD step, momentum update of the key encoder, then the batch's keys are
///    pushed to their queues.
/// Every random choice is derived from (seed, epoch, image), so the run is
/// reproducible and can be resumed at an epoch boundary.
class Pretrainer {
 public:
  Pretrainer(std::vector<imagecore::RgbImage> images, ContrastiveConfig config, std::uint64_t seed);

  /// Initial state from given query parameters (the key encoder starts as a copy).
  Pretrainer(std::vector<imagecore::RgbImage> images, ContrastiveConfig config, std::uint64_t seed,
             encoder::EncoderParams init);

  void run_epoch();
  void run(int epochs) {
    for (int e = 0; e < epochs; ++e) run_epoch();
  }

  int epochs_done() const { return epochs_done_; }
  const encoder::EncoderParams& query_encoder() const { return query_; }
  const encoder::EncoderParams& key_encoder() const { return key_; }
  const EmbeddingQueue& global_queue() const { return global_queue_; }
  const EmbeddingQueue& local_queue() const { return local_queue_; }
  const PretrainStats& stats() const { return stats_; }
  const ContrastiveConfig& config() const { return config_; }

  /// Everything needed to continue bit-identically: both encoders, optimizer
  /// velocity, both queues, stats and the epoch counter.
  void save_state(const std::filesystem::path& path) const;
  void load_state(const std::filesystem::path& path);

 private:
  void step(std::span<const std::size_t> batch, int epoch, EpochStats& acc, int& images_seen, int& patches_seen);

  std::vector<imagecore::RgbImage> images_;
  ContrastiveConfig config_;
  std::uint64_t seed_;
  encoder::EncoderParams query_;
  encoder::EncoderParams key_;
  encoder::SgdOptimizer optimizer_;
  EmbeddingQueue global_queue_;
  EmbeddingQueue local_queue_;
  PretrainStats stats_;
  int epochs_done_ = 0;
};

struct PretrainResult {
  encoder::EncoderParams prior_extractor;
  PretrainStats stats;
};

/// Runs config.epochs epochs from a seed-derived initialization.
PretrainResult pretrain(const std::vector<imagecore::RgbImage>& images, const ContrastiveConfig& config,
                        std::uint64_t seed);

/// Patches of one view used by the local branch (SLIC on Lab or
/// graph-based on RGB, then tight crops of at least min_patch_area).
std::vector<imagecore::RgbImage> local_patch_views(const imagecore::RgbImage& view, const ContrastiveConfig& config);

}  // namespace fsprior::contrastive
