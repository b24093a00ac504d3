#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fsprior/encoder/encoder.hpp"
#include "fsprior/encoder/sgd.hpp"
#include "fsprior/fewshot/dataset.hpp"
#include "fsprior/fewshot/decoder.hpp"
#include "fsprior/fewshot/episode.hpp"
#include "fsprior/fewshot/folds.hpp"
#include "fsprior/fewshot/metrics.hpp"
#include "fsprior/regionmap/region_map.hpp"

namespace fsprior::fewshot {

struct EpisodeConfig {
  int shots = 1;
  int num_folds = 4;
  int fold = 0;
  int train_episodes = 200;
  int eval_episodes = 1000;
  bool train_feature_extractor = true;  ///< F is updated with the decoder; F_p is always frozen
  regionmap::Polarity polarity = regionmap::Polarity::AsIs;
  encoder::EncoderArchitecture arch = encoder::EncoderArchitecture::standard();
  int decoder_hidden = 32;
  encoder::SgdConfig sgd{0.01, 0.9, 1e-4};

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Feature extractor F plus decoder.
struct FewShotModel {
  encoder::EncoderParams feature;
  DecoderParams decoder;

  bool operator==(const FewShotModel&) const = default;
};

FewShotModel init_model(const EpisodeConfig& config, std::uint64_t seed);

/// Everything one forward pass over an episode produces.
struct EpisodeForward {
  regionmap::RegionMap prior;
  regionmap::RegionMap guided;
  encoder::Tensor3<float> logits;   ///< feature grid
  imagecore::BinaryMask prediction; ///< image resolution
  imagecore::BinaryMask gt_grid;    ///< query mask on the feature grid
};

/// Throws std::invalid_argument on architecture mismatch between F_p and F
/// and "empty support mask" when a support mask vanishes on the grid.
EpisodeForward run_episode(const Episode& ep, const encoder::EncoderParams& prior, const FewShotModel& model,
                           regionmap::Polarity polarity);

struct TrainRecord {
  int episode = 0;
  int class_id = 0;
  double loss = 0.0;
};

struct TrainStats {
  std::vector<TrainRecord> records;
  int skipped = 0;  ///< episodes whose support mask vanished on the feature grid

  /// CSV: episode,class,loss
  std::string to_csv() const;
};

struct TrainResult {
  FewShotModel model;
  TrainStats stats;
};

/// Samples config.train_episodes training-phase episodes and takes one SGD
/// step per episode on the cross-entropy of the decoded query mask. Gradients
/// reach F through the bridge features and the guider; region maps are
/// treated as constants.
TrainResult episode_train(const SegDataset& data, const FoldSplit& split, const encoder::EncoderParams& prior,
                          const EpisodeConfig& config, std::uint64_t seed,
                          std::optional<FewShotModel> init = std::nullopt);

inline constexpr std::array<double, 9> kRecallAlphas = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

struct EpisodeRecord {
  int episode = 0;
  int class_id = 0;
  std::size_t query_id = 0;
  ConfusionCounts counts;  ///< image-resolution prediction vs query mask
  bool recall_valid = false;  ///< false when the query mask vanishes on the grid
  std::array<double, kRecallAlphas.size()> recall_prior{};
  std::array<double, kRecallAlphas.size()> recall_guided{};
};

struct RecallRow {
  double alpha = 0.0;
  double recall_prior = 0.0;
  double recall_guided = 0.0;
};

struct EvalReport {
  int fold = 0;
  std::string phase = "test";
  std::vector<EpisodeRecord> episodes;
  MetricAccumulator metrics;
  int skipped = 0;

  double miou() const { return metrics.miou(); }
  double fbiou() const { return metrics.fbiou(); }
  /// Mean recall over episodes with a valid recall, per alpha.
  std::vector<RecallRow> recall_sweep() const;

  /// fold,phase,miou,fbiou,iou_c<k>... (one row)
  std::string metrics_csv() const;
  /// episode,class,query,tp,fp,fn,tn,iou
  std::string episodes_csv() const;
  /// alpha,recall_p,recall_g
  std::string sweep_csv() const;
  std::string summary_json() const;
};

/// Samples config.eval_episodes test-phase episodes; pure function of its
/// arguments.
EvalReport episode_eval(const SegDataset& data, const FoldSplit& split, const encoder::EncoderParams& prior,
                        const FewShotModel& model, const EpisodeConfig& config, std::uint64_t seed);

/// Seed of the i-th training or evaluation episode.
std::uint64_t episode_seed(std::uint64_t seed, Phase phase, int index);

}  // namespace fsprior::fewshot
