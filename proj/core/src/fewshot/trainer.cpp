#include "fsprior/fewshot/trainer.hpp"

#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "fsprior/common/rng.hpp"

namespace fsprior::fewshot {

using encoder::EncoderParams;
using encoder::FeatureMap;
using imagecore::BinaryMask;

namespace {

enum SeedStream : std::uint64_t { kFeatureInit = 21, kDecoderInit = 22, kTrainEpisode = 23, kEvalEpisode = 24 };

void check_prior(const EncoderParams& prior, const FewShotModel& model) {
  if (prior.arch.feature_channels() != model.feature.arch.feature_channels()) {
    throw std::invalid_argument("prior and feature extractors produce different channel counts");
  }
  if (prior.arch.output_extent(64) != model.feature.arch.output_extent(64)) {
    throw std::invalid_argument("prior and feature extractors produce different grids");
  }
  if (model.decoder.arch.feature_channels != model.feature.arch.feature_channels()) {
    throw std::invalid_argument("decoder does not match the feature extractor");
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  return buf;
}

bool is_empty_support(const std::invalid_argument& e) { return std::string(e.what()) == "empty support mask"; }

}  // namespace

void EpisodeConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument(field + ": " + why);
  };
  if (shots < 1) fail("shots", "must be >= 1");
  if (num_folds < 1) fail("num_folds", "must be >= 1");
  if (fold < 0 || fold >= num_folds) fail("fold", "must lie in [0, num_folds)");
  if (train_episodes < 0) fail("train_episodes", "must be >= 0");
  if (eval_episodes < 0) fail("eval_episodes", "must be >= 0");
  if (decoder_hidden < 1) fail("decoder_hidden", "must be >= 1");
  if (!(sgd.learning_rate >= 0.0)) fail("sgd.learning_rate", "must be >= 0");
  try {
    arch.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("arch.") + e.what());
  }
}

std::uint64_t episode_seed(std::uint64_t seed, Phase phase, int index) {
  return derive_seed(seed, phase == Phase::Train ? kTrainEpisode : kEvalEpisode, index);
}

FewShotModel init_model(const EpisodeConfig& config, std::uint64_t seed) {
  config.validate();
  const auto dec_arch = encoder::DecoderArchitecture::standard(config.arch.feature_channels(), config.decoder_hidden);
  return {encoder::init_encoder(config.arch, derive_seed(seed, kFeatureInit)),
          init_decoder(dec_arch, derive_seed(seed, kDecoderInit))};
}

namespace {

struct Forward {
  EpisodeForward out;
  encoder::EncoderCache<float> query_cache;
  std::vector<encoder::EncoderCache<float>> support_caches;
  std::vector<BinaryMask> support_grids;
  DecoderCache<float> decoder_cache;
};

Forward forward(const Episode& ep, const EncoderParams& prior, const FewShotModel& model, regionmap::Polarity polarity,
                bool keep_caches) {
  check_prior(prior, model);
  Forward f;
  const auto xq = encoder::encoder_forward(model.feature, ep.query_image, keep_caches ? &f.query_cache : nullptr).features;
  const auto pq = encoder::encoder_forward(prior, ep.query_image).features;

  std::vector<FeatureMap> xs;
  f.support_caches.resize(keep_caches ? ep.support_images.size() : 0);
  for (std::size_t k = 0; k < ep.support_images.size(); ++k) {
    xs.push_back(
        encoder::encoder_forward(model.feature, ep.support_images[k], keep_caches ? &f.support_caches[k] : nullptr)
            .features);
    f.support_grids.push_back(regionmap::mask_to_grid(ep.support_masks[k], xs.back().height, xs.back().width));
  }

  f.out.prior = regionmap::prior_region_map(xq, pq);
  f.out.guided = regionmap::guided_region_map(xq, xs, ep.support_masks);

  std::vector<float> guider(static_cast<std::size_t>(xq.channels), 0.0f);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const auto g = masked_pool(xs[k], f.support_grids[k]);
    for (std::size_t c = 0; c < guider.size(); ++c) guider[c] += g[c];
  }
  for (auto& v : guider) v /= static_cast<float>(xs.size());

  const auto maps = regionmap::fuse_maps(f.out.prior, f.out.guided, polarity);
  f.out.logits = decode<float>(model.decoder, xq, maps, guider, keep_caches ? &f.decoder_cache : nullptr);
  f.out.prediction = predict_mask(f.out.logits, ep.query_image.width(), ep.query_image.height());
  f.out.gt_grid = regionmap::mask_to_grid(ep.query_mask, xq.height, xq.width);
  return f;
}

}  // namespace

EpisodeForward run_episode(const Episode& ep, const EncoderParams& prior, const FewShotModel& model,
                           regionmap::Polarity polarity) {
  return forward(ep, prior, model, polarity, false).out;
}

std::string TrainStats::to_csv() const {
  std::string out = "episode,class,loss\n";
  for (const auto& r : records) out += std::to_string(r.episode) + "," + std::to_string(r.class_id) + "," + fmt(r.loss) + "\n";
  return out;
}

TrainResult episode_train(const SegDataset& data, const FoldSplit& split, const EncoderParams& prior,
                          const EpisodeConfig& config, std::uint64_t seed, std::optional<FewShotModel> init) {
  config.validate();
  TrainResult result{init ? std::move(*init) : init_model(config, seed), {}};
  auto& model = result.model;
  check_prior(prior, model);
  encoder::SgdOptimizer feature_opt(model.feature.values.size(), config.sgd);
  encoder::SgdOptimizer decoder_opt(model.decoder.values.size(), config.sgd);

  for (int i = 0; i < config.train_episodes; ++i) {
    const Episode ep = sample_episode(data, split, Phase::Train, config.shots, episode_seed(seed, Phase::Train, i));
    Forward f;
    try {
      f = forward(ep, prior, model, config.polarity, true);
    } catch (const std::invalid_argument& e) {
      if (!is_empty_support(e)) throw;
      ++result.stats.skipped;
      continue;
    }

    encoder::Tensor3<float> grad_logits;
    const double loss = cross_entropy<float>(f.out.logits, f.out.gt_grid, &grad_logits);
    std::vector<float> grad_dec(model.decoder.values.size(), 0.0f);
    const auto g_in = decode_backward<float>(model.decoder, f.decoder_cache, grad_logits, grad_dec);

    if (config.train_feature_extractor) {
      std::vector<float> grad_f(model.feature.values.size(), 0.0f);
      encoder::encoder_backward<float>(model.feature, f.query_cache, g_in.xq, {}, grad_f);
      // guider = mean_k masked_pool(Xs_k): each masked cell of support k gets g / (K * n_k).
      const float shots = static_cast<float>(ep.shots());
      for (std::size_t k = 0; k < f.support_caches.size(); ++k) {
        const auto& grid = f.support_grids[k];
        const float scale = 1.0f / (shots * static_cast<float>(grid.count()));
        const int channels = model.feature.arch.feature_channels();
        encoder::Tensor3<float> gxs(grid.height(), grid.width(), channels);
        for (std::size_t c = 0; c < gxs.cells(); ++c) {
          if (!grid.get(c)) continue;
          auto cell = gxs.cell(c);
          for (int ch = 0; ch < channels; ++ch) cell[ch] = g_in.guider[ch] * scale;
        }
        encoder::encoder_backward<float>(model.feature, f.support_caches[k], gxs, {}, grad_f);
      }
      feature_opt.step(model.feature.values, grad_f);
    }
    decoder_opt.step(model.decoder.values, grad_dec);
    result.stats.records.push_back({i, ep.class_id, loss});
  }
  return result;
}

std::vector<RecallRow> EvalReport::recall_sweep() const {
  std::vector<RecallRow> rows;
  for (std::size_t a = 0; a < kRecallAlphas.size(); ++a) {
    RecallRow r{kRecallAlphas[a], 0.0, 0.0};
    std::size_t n = 0;
    for (const auto& e : episodes) {
      if (!e.recall_valid) continue;
      r.recall_prior += e.recall_prior[a];
      r.recall_guided += e.recall_guided[a];
      ++n;
    }
    if (n > 0) {
      r.recall_prior /= static_cast<double>(n);
      r.recall_guided /= static_cast<double>(n);
    }
    rows.push_back(r);
  }
  return rows;
}

std::string EvalReport::metrics_csv() const {
  const auto cls = metrics.class_iou();
  std::string head = "fold,phase,miou,fbiou";
  std::string row = std::to_string(fold) + "," + phase + "," + fmt(miou()) + "," + fmt(fbiou());
  for (const auto& [c, v] : cls) {
    head += ",iou_c" + std::to_string(c);
    row += "," + fmt(v);
  }
  return head + "\n" + row + "\n";
}

std::string EvalReport::episodes_csv() const {
  std::string out = "episode,class,query,tp,fp,fn,tn,iou\n";
  for (const auto& e : episodes) {
    out += std::to_string(e.episode) + "," + std::to_string(e.class_id) + "," + std::to_string(e.query_id) + "," +
           std::to_string(e.counts.tp) + "," + std::to_string(e.counts.fp) + "," + std::to_string(e.counts.fn) + "," +
           std::to_string(e.counts.tn) + "," + fmt(iou(e.counts)) + "\n";
  }
  return out;
}

std::string EvalReport::sweep_csv() const {
  std::string out = "alpha,recall_p,recall_g\n";
  char buf[32];
  for (const auto& r : recall_sweep()) {
    std::snprintf(buf, sizeof(buf), "%.1f", r.alpha);
    out += std::string(buf) + "," + fmt(r.recall_prior) + "," + fmt(r.recall_guided) + "\n";
  }
  return out;
}

std::string EvalReport::summary_json() const {
  nlohmann::ordered_json j;
  j["fold"] = fold;
  j["phase"] = phase;
  j["episodes"] = episodes.size();
  j["skipped"] = skipped;
  j["miou"] = miou();
  j["fbiou"] = fbiou();
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  for (const auto& [c, v] : metrics.class_iou()) per_class[std::to_string(c)] = v;
  j["class_iou"] = per_class;
  nlohmann::ordered_json sweep = nlohmann::ordered_json::array();
  for (const auto& r : recall_sweep()) sweep.push_back({{"alpha", r.alpha}, {"recall_p", r.recall_prior}, {"recall_g", r.recall_guided}});
  j["recall_sweep"] = sweep;
  return j.dump(2) + "\n";
}

EvalReport episode_eval(const SegDataset& data, const FoldSplit& split, const EncoderParams& prior,
                        const FewShotModel& model, const EpisodeConfig& config, std::uint64_t seed) {
  config.validate();
  check_prior(prior, model);
  EvalReport report;
  report.fold = split.fold;
  for (int i = 0; i < config.eval_episodes; ++i) {
    const Episode ep = sample_episode(data, split, Phase::Test, config.shots, episode_seed(seed, Phase::Test, i));
    EpisodeForward out;
    try {
      out = run_episode(ep, prior, model, config.polarity);
    } catch (const std::invalid_argument& e) {
      if (!is_empty_support(e)) throw;
      ++report.skipped;
      continue;
    }
    EpisodeRecord rec;
    rec.episode = i;
    rec.class_id = ep.class_id;
    rec.query_id = ep.query_id;
    rec.counts = confusion(out.prediction, ep.query_mask);
    rec.recall_valid = out.gt_grid.count() > 0;
    if (rec.recall_valid) {
      for (std::size_t a = 0; a < kRecallAlphas.size(); ++a) {
        rec.recall_prior[a] = region_recall(regionmap::threshold_region(out.prior, kRecallAlphas[a]), out.gt_grid);
        rec.recall_guided[a] = region_recall(regionmap::threshold_region(out.guided, kRecallAlphas[a]), out.gt_grid);
      }
    }
    report.metrics.add(ep.class_id, rec.counts);
    report.episodes.push_back(rec);
  }
  return report;
}

}  // namespace fsprior::fewshot
