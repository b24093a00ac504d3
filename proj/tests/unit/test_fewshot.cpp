#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "fsprior/common/error.hpp"
#include "fsprior/common/rng.hpp"
#include "fsprior/encoder/checkpoint.hpp"
#include "fsprior/fewshot/dataset.hpp"
#include "fsprior/fewshot/decoder.hpp"
#include "fsprior/fewshot/episode.hpp"
#include "fsprior/fewshot/folds.hpp"
#include "fsprior/fewshot/metrics.hpp"
#include "fsprior/fewshot/trainer.hpp"
#include "fsprior/imagecore/synth.hpp"
#include "oracles.hpp"
#include "toy_nets.hpp"

namespace fs = std::filesystem;
using namespace fsprior;
using namespace fsprior::fewshot;
using imagecore::BinaryMask;

namespace {

const SegDataset& small_data() {
  static const SegDataset d = SegDataset::from_synthetic(imagecore::synth_dataset(64, 8, 32, 5), 8);
  return d;
}

EpisodeConfig small_config() {
  EpisodeConfig c;
  c.train_episodes = 12;
  c.eval_episodes = 10;
  return c;
}

BinaryMask random_mask(Rng& rng, int w, int h, double p) {
  BinaryMask m(w, h);
  for (std::size_t i = 0; i < m.size(); ++i) m.set(i, rng.bernoulli(p));
  return m;
}

}  // namespace

TEST(Folds, ContiguousBlocksPartitionTheClasses) {
  const auto folds = make_folds(8, 4);
  ASSERT_EQ(folds.size(), 4u);
  EXPECT_EQ(folds[1].test_classes, (std::vector<int>{2, 3}));
  EXPECT_EQ(folds[1].train_classes, (std::vector<int>{0, 1, 4, 5, 6, 7}));
  for (const auto& f : folds) {
    std::set<int> all(f.train_classes.begin(), f.train_classes.end());
    for (int c : f.test_classes) EXPECT_TRUE(all.insert(c).second);
    EXPECT_EQ(all.size(), 8u);
  }
  EXPECT_THROW(make_folds(8, 3), std::invalid_argument);
  EXPECT_THROW(make_folds(8, 0), std::invalid_argument);
  EXPECT_THROW(make_folds(2, 4), std::invalid_argument);
}

TEST(Dataset, SyntheticIndexAndMasks) {
  const auto& d = small_data();
  EXPECT_EQ(d.size(), 64u);
  EXPECT_EQ(d.num_classes(), 8);
  std::size_t total = 0;
  for (int c = 0; c < 8; ++c) {
    for (std::size_t i : d.images_of(c)) {
      EXPECT_TRUE(d[i].contains(c));
      EXPECT_GT(d[i].mask_for(c).count(), 0u);
    }
    total += d.images_of(c).size();
  }
  EXPECT_EQ(total, 64u);
  EXPECT_THROW(d.images_of(8), std::invalid_argument);
}

TEST(Dataset, SaveLoadRoundTrip) {
  const fs::path root = fs::temp_directory_path() / "fsprior_fewshot_ds";
  fs::remove_all(root);
  const SegDataset d = SegDataset::from_synthetic(imagecore::synth_dataset(6, 3, 16, 2), 3);
  d.save(root);
  EXPECT_TRUE(fs::exists(root / "images" / "000000.png"));
  EXPECT_TRUE(fs::exists(root / "masks" / "000005.png"));
  const auto back = SegDataset::load(root);
  EXPECT_EQ(back.samples(), d.samples());
  EXPECT_EQ(back.class_names(), d.class_names());
}

TEST(Dataset, RejectsInconsistentData) {
  Sample s{imagecore::RgbImage(4, 4), imagecore::Grid<std::uint8_t>(4, 4, 0)};
  s.labels.at(0, 0) = 3;
  EXPECT_THROW(SegDataset({s}, {"a", "b"}), DataError);
  Sample t{imagecore::RgbImage(4, 4), imagecore::Grid<std::uint8_t>(3, 4, 0)};
  EXPECT_THROW(SegDataset({t}, {"a"}), DataError);
  EXPECT_THROW(SegDataset::load(fs::temp_directory_path() / "fsprior_no_such_dataset"), IoError);
}

TEST(Episode, DrawsDistinctImagesOfOneTestClass) {
  const auto& d = small_data();
  const auto split = make_folds(8, 4)[2];
  for (int i = 0; i < 30; ++i) {
    const auto ep = sample_episode(d, split, Phase::Test, 3, derive_seed(9, i));
    EXPECT_NE(std::find(split.test_classes.begin(), split.test_classes.end(), ep.class_id),
              split.test_classes.end());
    std::set<std::size_t> ids(ep.support_ids.begin(), ep.support_ids.end());
    ids.insert(ep.query_id);
    EXPECT_EQ(ids.size(), 4u);
    EXPECT_EQ(ep.shots(), 3);
    EXPECT_EQ(ep.query_mask, d[ep.query_id].mask_for(ep.class_id));
    for (int k = 0; k < 3; ++k) EXPECT_EQ(ep.support_images[k], d[ep.support_ids[k]].image);
  }
}

TEST(Episode, DeterministicAndPhaseAware) {
  const auto& d = small_data();
  const auto split = make_folds(8, 4)[0];
  const auto a = sample_episode(d, split, Phase::Train, 1, 77);
  const auto b = sample_episode(d, split, Phase::Train, 1, 77);
  EXPECT_EQ(a.support_ids, b.support_ids);
  EXPECT_EQ(a.query_id, b.query_id);
  EXPECT_NE(std::find(split.train_classes.begin(), split.train_classes.end(), a.class_id),
            split.train_classes.end());
}

TEST(Episode, TooFewImagesNamesTheClass) {
  const auto& d = small_data();
  const auto split = make_folds(8, 4)[0];
  try {
    sample_episode(d, split, Phase::Test, 60, 1);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("class"), std::string::npos);
  }
  EXPECT_THROW(sample_episode(d, split, Phase::Test, 0, 1), std::invalid_argument);
}

TEST(Decoder, MaskedPool) {
  encoder::Tensor3<float> x(2, 2, 2);
  x.values = {1, 10, 2, 20, 3, 30, 4, 40};
  BinaryMask m(2, 2);
  m.set(1, 0, true);
  m.set(1, 1, true);
  EXPECT_EQ(masked_pool(x, m), (std::vector<float>{3, 30}));
  EXPECT_THROW(masked_pool(x, BinaryMask(2, 2)), std::invalid_argument);
  EXPECT_THROW(masked_pool(x, BinaryMask(3, 2)), std::invalid_argument);
}

TEST(Decoder, InputLayout) {
  encoder::Tensor3<float> xq(1, 1, 2), maps(1, 1, 2);
  xq.values = {1, 2};
  maps.values = {0.5f, 0.25f};
  const std::vector<float> g = {7, 8};
  const auto in = decoder_input<float>(xq, maps, g);
  EXPECT_EQ(in.values, (std::vector<float>{1, 2, 7, 8, 0.5f, 0.25f}));
}

TEST(Decoder, CrossEntropyReferenceValues) {
  encoder::Tensor3<float> logits(1, 2, 2);
  logits.values = {0, 0, 10, -10};
  BinaryMask gt(2, 1);
  gt.set(0, 0, true);  // cell 0: uniform logits, label 1 -> ln 2
  // cell 1: background with margin 20 -> log(1 + e^-20)
  const double expected = (std::log(2.0) + std::log1p(std::exp(-20.0))) / 2;
  encoder::Tensor3<float> grad;
  EXPECT_NEAR(cross_entropy(logits, gt, &grad), expected, 1e-7);
  EXPECT_NEAR(grad.values[0], 0.25, 1e-7);
  EXPECT_NEAR(grad.values[1], -0.25, 1e-7);
}

TEST(Decoder, ParameterGradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const toy::DecoderToy net(seed);
    const auto r = oracle::check_gradient(
        net.params, net.grad(net.params), 1e-6, [&](const auto& p) { return net.loss(p); },
        [&](const auto& a, const auto& b) { return net.pattern(a) == net.pattern(b); });
    EXPECT_LT(r.max_rel_error, 1e-3) << "seed " << seed;
    EXPECT_GT(r.checked, r.skipped);
  }
}

TEST(Decoder, InputGradientsMatchFiniteDifferences) {
  const toy::DecoderToy net(3);
  const auto params = net.net(net.params);
  DecoderCache<double> cache;
  const auto logits = decode<double>(params, net.xq, net.maps, net.guider, &cache);
  encoder::Tensor3<double> gl;
  cross_entropy<double>(logits, net.gt, &gl);
  std::vector<double> scratch(net.params.size(), 0.0);
  const auto g = decode_backward<double>(params, cache, gl, scratch);

  auto loss_at = [&](const encoder::Tensor3<double>& xq, const std::vector<double>& guider) {
    return cross_entropy<double>(decode<double>(params, xq, net.maps, guider), net.gt);
  };
  const double h = 1e-6;
  for (std::size_t i = 0; i < net.xq.values.size(); ++i) {
    auto p = net.xq, m = net.xq;
    p.values[i] += h;
    m.values[i] -= h;
    EXPECT_NEAR(g.xq.values[i], (loss_at(p, net.guider) - loss_at(m, net.guider)) / (2 * h), 1e-5);
  }
  for (std::size_t i = 0; i < net.guider.size(); ++i) {
    auto p = net.guider, m = net.guider;
    p[i] += h;
    m[i] -= h;
    EXPECT_NEAR(g.guider[i], (loss_at(net.xq, p) - loss_at(net.xq, m)) / (2 * h), 1e-5);
  }
}

TEST(Decoder, CheckpointRoundTripAndMismatch) {
  const fs::path d = fs::temp_directory_path() / "fsprior_fewshot_dec";
  fs::remove_all(d);
  fs::create_directories(d);
  const auto p = init_decoder(DecoderArchitecture::standard(8, 16), 4);
  save_decoder(d / "dec.ckpt", p);
  EXPECT_EQ(load_decoder(d / "dec.ckpt"), p);
  encoder::save_encoder(d / "enc.ckpt", encoder::init_encoder(encoder::EncoderArchitecture::standard(), 1));
  EXPECT_THROW(load_decoder(d / "enc.ckpt"), IoError);
}

TEST(Decoder, PredictMask) {
  encoder::Tensor3<float> logits(1, 3, 2);
  logits.values = {0, 1, 1, 1, 2, 0};
  const auto m = predict_mask(logits);
  EXPECT_TRUE(m.get(0, 0));
  EXPECT_FALSE(m.get(1, 0));  // tie goes to background
  EXPECT_FALSE(m.get(2, 0));
  encoder::Tensor3<float> uniform(2, 2, 2);
  for (int i = 0; i < 4; ++i) uniform.values[2 * i + 1] = 1;
  EXPECT_EQ(predict_mask(uniform, 8, 8).count(), 64u);
}

TEST(Metrics, MatchConfusionOracle) {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const int w = 1 + static_cast<int>(rng.below(12));
    const int h = 1 + static_cast<int>(rng.below(12));
    const auto pred = random_mask(rng, w, h, rng.uniform());
    const auto gt = random_mask(rng, w, h, rng.uniform());
    const auto ref = oracle::enumerate(pred, gt);
    const auto c = confusion(pred, gt);
    EXPECT_EQ(c.tp, ref.m[1][1]);
    EXPECT_EQ(c.fp, ref.m[0][1]);
    EXPECT_EQ(c.fn, ref.m[1][0]);
    EXPECT_EQ(c.tn, ref.m[0][0]);
    EXPECT_DOUBLE_EQ(iou(pred, gt), oracle::class_iou(ref, 1));
    EXPECT_DOUBLE_EQ(fbiou(pred, gt), (oracle::class_iou(ref, 1) + oracle::class_iou(ref, 0)) / 2);
  }
}

TEST(Metrics, EdgeCases) {
  const BinaryMask empty(3, 3);
  EXPECT_EQ(iou(empty, empty), 1.0);
  EXPECT_THROW(region_recall(empty, empty), std::invalid_argument);
  EXPECT_THROW(confusion(empty, BinaryMask(2, 3)), std::invalid_argument);
  EXPECT_EQ(miou(std::span<const double>{}), 0.0);
  BinaryMask gt(2, 2);
  gt.set(0, 0, true);
  gt.set(1, 0, true);
  BinaryMask r(2, 2);
  r.set(0, 0, true);
  r.set(1, 1, true);
  EXPECT_EQ(region_recall(r, gt), 0.5);
  const ConfusionCounts c{1, 2, 3, 4};
  EXPECT_EQ(c.complement(), (ConfusionCounts{4, 3, 2, 1}));
}

TEST(Metrics, AccumulatorSumsCountsPerClass) {
  MetricAccumulator acc;
  acc.add(0, {1, 1, 0, 8});   // class 0: 1/2
  acc.add(0, {3, 0, 1, 6});   // summed 4/(4+1+1) = 2/3
  acc.add(5, {0, 2, 2, 6});   // 0
  const auto per = acc.class_iou();
  EXPECT_DOUBLE_EQ(per.at(0), 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(per.at(5), 0.0);
  EXPECT_DOUBLE_EQ(acc.miou(), (4.0 / 6.0) / 2);
  // all: tp 4 fp 3 fn 3 tn 20
  EXPECT_DOUBLE_EQ(acc.fbiou(), (4.0 / 10.0 + 20.0 / 26.0) / 2);
  EXPECT_EQ(acc.episodes(), 3u);
}

TEST(Trainer, ConfigValidation) {
  auto c = small_config();
  c.shots = 0;
  try {
    c.validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_EQ(std::string(e.what()).rfind("shots", 0), 0u);
  }
  c = small_config();
  c.fold = 4;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  c.arch.convs[1].in_channels = 5;
  try {
    c.validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_EQ(std::string(e.what()).rfind("arch.", 0), 0u);
  }
}

TEST(Trainer, RunEpisodeShapes) {
  const auto& d = small_data();
  const auto cfg = small_config();
  const auto model = init_model(cfg, 3);
  const auto prior = encoder::init_encoder(cfg.arch, 4);
  const auto ep = sample_episode(d, make_folds(8, 4)[0], Phase::Test, 1, 2);
  const auto f = run_episode(ep, prior, model, regionmap::Polarity::AsIs);
  EXPECT_EQ(f.prior.height, 8);
  EXPECT_EQ(f.guided.width, 8);
  EXPECT_EQ(f.logits.channels, 2);
  EXPECT_EQ(f.prediction.width(), 32);
  EXPECT_EQ(f.gt_grid.width(), 8);
  const auto other = encoder::init_encoder(encoder::EncoderArchitecture::with_widths(4, 4, 4, 4, 8), 1);
  EXPECT_THROW(run_episode(ep, other, model, regionmap::Polarity::AsIs), std::invalid_argument);
}

TEST(Trainer, TrainingIsDeterministicAndMovesBothNetworks) {
  const auto& d = small_data();
  const auto cfg = small_config();
  const auto split = make_folds(8, 4)[0];
  const auto prior = encoder::init_encoder(cfg.arch, 4);
  const auto a = episode_train(d, split, prior, cfg, 11);
  const auto b = episode_train(d, split, prior, cfg, 11);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.stats.to_csv(), b.stats.to_csv());
  const auto init = init_model(cfg, 11);
  EXPECT_NE(a.model.feature, init.feature);
  EXPECT_NE(a.model.decoder, init.decoder);
  EXPECT_EQ(static_cast<int>(a.stats.records.size()) + a.stats.skipped, cfg.train_episodes);
  for (const auto& r : a.stats.records) {
    EXPECT_TRUE(std::isfinite(r.loss));
    EXPECT_NE(std::find(split.train_classes.begin(), split.train_classes.end(), r.class_id),
              split.train_classes.end());
  }
}

TEST(Trainer, FrozenFeatureExtractorStaysPut) {
  auto cfg = small_config();
  cfg.train_feature_extractor = false;
  const auto prior = encoder::init_encoder(cfg.arch, 4);
  const auto r = episode_train(small_data(), make_folds(8, 4)[1], prior, cfg, 11);
  EXPECT_EQ(r.model.feature, init_model(cfg, 11).feature);
}

TEST(Eval, ReportIsConsistentWithPerEpisodeCounts) {
  const auto& d = small_data();
  const auto cfg = small_config();
  const auto split = make_folds(8, 4)[0];
  const auto prior = encoder::init_encoder(cfg.arch, 4);
  const auto model = init_model(cfg, 3);
  const auto rep = episode_eval(d, split, prior, model, cfg, 5);
  EXPECT_EQ(static_cast<int>(rep.episodes.size()) + rep.skipped, cfg.eval_episodes);

  MetricAccumulator acc;
  for (const auto& e : rep.episodes) acc.add(e.class_id, e.counts);
  EXPECT_DOUBLE_EQ(acc.miou(), rep.miou());
  EXPECT_DOUBLE_EQ(acc.fbiou(), rep.fbiou());
  EXPECT_EQ(episode_eval(d, split, prior, model, cfg, 5).episodes_csv(), rep.episodes_csv());

  const auto sweep = rep.recall_sweep();
  ASSERT_EQ(sweep.size(), 9u);
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    EXPECT_LE(sweep[i].recall_prior, sweep[i - 1].recall_prior);
    EXPECT_LE(sweep[i].recall_guided, sweep[i - 1].recall_guided);
  }
  const auto sweep_text = rep.sweep_csv();
  EXPECT_EQ(std::count(sweep_text.begin(), sweep_text.end(), '\n'), 10);
  EXPECT_EQ(rep.metrics_csv().rfind("fold,phase,miou,fbiou,iou_c0,iou_c1\n", 0), 0u);
}

TEST(Eval, EpisodeSeedsSeparatePhases) {
  EXPECT_NE(episode_seed(1, Phase::Train, 0), episode_seed(1, Phase::Test, 0));
  EXPECT_NE(episode_seed(1, Phase::Test, 0), episode_seed(1, Phase::Test, 1));
  EXPECT_EQ(episode_seed(1, Phase::Test, 3), episode_seed(1, Phase::Test, 3));
}
