#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <filesystem>

#include "fsprior/common/atomic_file.hpp"
#include "fsprior/common/error.hpp"
#include "fsprior/contrastive/info_nce.hpp"
#include "fsprior/contrastive/pretrain.hpp"
#include "fsprior/contrastive/queue.hpp"
#include "fsprior/imagecore/synth.hpp"
#include "oracles.hpp"
#include "toy_nets.hpp"

namespace fs = std::filesystem;
using namespace fsprior;
using namespace fsprior::contrastive;
using encoder::Embedding;

namespace {

Embedding unit(std::vector<float> v) { return encoder::normalize_embedding(std::move(v)); }

std::vector<imagecore::RgbImage> small_images(int n) {
  std::vector<imagecore::RgbImage> out;
  for (const auto& li : imagecore::synth_dataset(n, 4, 32, 21)) out.push_back(li.image);
  return out;
}

ContrastiveConfig small_config() {
  ContrastiveConfig c;
  c.batch_size = 4;
  c.queue_capacity = 16;
  c.epochs = 2;
  c.slic_target_patch_area = 128;
  c.patches_per_image = 2;
  c.momentum = 0.9;
  return c;
}

}  // namespace

TEST(Queue, FifoOrderAndOverwrite) {
  EmbeddingQueue q(3, 2);
  EXPECT_TRUE(q.empty());
  q.enqueue(unit({1, 0}));
  q.enqueue(unit({0, 1}));
  EXPECT_EQ(q.size(), 2u);
  EXPECT_EQ(q.at(0)[0], 1.0f);
  q.enqueue(std::vector<Embedding>{unit({-1, 0}), unit({0, -1})});
  EXPECT_EQ(q.size(), 3u);
  // (1,0) was the oldest and got replaced.
  EXPECT_EQ(q.at(0)[1], 1.0f);
  EXPECT_EQ(q.at(2)[1], -1.0f);
  EXPECT_EQ(q.head(), 1u);
  EXPECT_THROW(q.at(3), std::out_of_range);
}

TEST(Queue, RejectsBadKeysAtomically) {
  EmbeddingQueue q(4, 2);
  Embedding not_unit{{0.5f, 0.5f}, true};
  EXPECT_THROW(q.enqueue(std::vector<Embedding>{unit({1, 0}), not_unit}), std::invalid_argument);
  EXPECT_TRUE(q.empty());
  EXPECT_THROW(q.enqueue(unit({1, 0, 0})), std::invalid_argument);
  EXPECT_THROW(q.enqueue(Embedding{{0.0f, 0.0f}, false}), std::invalid_argument);
  EXPECT_THROW(EmbeddingQueue(0, 2), std::invalid_argument);
}

TEST(Queue, RestoreRoundTrip) {
  EmbeddingQueue a(3, 2);
  a.enqueue(std::vector<Embedding>{unit({1, 0}), unit({0, 1}), unit({1, 1}), unit({-1, 0})});
  EmbeddingQueue b(3, 2);
  b.restore(std::vector<float>(a.storage().begin(), a.storage().end()), a.head(), a.size());
  EXPECT_EQ(a, b);
  EXPECT_THROW(b.restore(std::vector<float>(6, 0.0f), 1, 2), std::invalid_argument);
}

TEST(InfoNce, ReferenceValues) {
  EmbeddingQueue q(3, 2);
  // q . k+ = 0 and three negatives with q . k = 0, tau = 1: -log(1/4) = ln 4.
  q.enqueue(std::vector<Embedding>{unit({0, 1}), unit({0, -1}), unit({0, 1})});
  const std::vector<float> qv = {1, 0};
  const std::vector<float> kp = {0, 1};
  const auto r = info_nce<float>(qv, kp, q, 1.0);
  EXPECT_NEAR(r.loss, 1.3862943611198906, 1e-6);

  // One negative orthogonal to q, positive equal to q: log(1 + e^-1).
  EmbeddingQueue one(1, 2);
  one.enqueue(unit({0, 1}));
  const auto r2 = info_nce<float>(qv, qv, one, 1.0);
  EXPECT_NEAR(r2.loss, 0.31326168751822286, 1e-6);
  EXPECT_NEAR(r2.positive_similarity, 1.0, 1e-7);
  EXPECT_NEAR(r2.mean_negative_similarity, 0.0, 1e-7);
}

TEST(InfoNce, StableAtTinyTemperature) {
  EmbeddingQueue q(2, 2);
  q.enqueue(std::vector<Embedding>{unit({-1, 0}), unit({0, 1})});
  const std::vector<float> v = {1, 0};
  const auto r = info_nce<float>(v, v, q, 1e-3);
  EXPECT_TRUE(std::isfinite(r.loss));
  EXPECT_GE(r.loss, 0.0);
  EXPECT_LT(r.loss, 1e-6);
}

TEST(InfoNce, RejectsBadArguments) {
  EmbeddingQueue q(2, 2);
  const std::vector<float> v = {1, 0};
  EXPECT_THROW(info_nce<float>(v, v, q, 0.07), std::invalid_argument);
  q.enqueue(unit({0, 1}));
  EXPECT_THROW(info_nce<float>(v, v, q, 0.0), std::invalid_argument);
  const std::vector<float> not_unit = {2, 0};
  EXPECT_THROW(info_nce<float>(not_unit, v, q, 0.07), std::invalid_argument);
  const std::vector<float> wrong_dim = {1, 0, 0};
  EXPECT_THROW(info_nce<float>(wrong_dim, wrong_dim, q, 0.07), std::invalid_argument);
}

TEST(InfoNce, GradientsMatchFiniteDifferences) {
  // Loss as a plain function of q and k+ (no renormalisation): the analytic
  // gradient is exact, so compare against central differences directly.
  Rng rng(4);
  EmbeddingQueue queue(5, 4);
  for (int i = 0; i < 5; ++i) queue.enqueue(toy::random_unit(rng, 4));
  const auto q = toy::to_double(toy::random_unit(rng, 4).values);
  const auto k = toy::to_double(toy::random_unit(rng, 4).values);
  const double tau = 0.3;
  const auto r = info_nce<double>(q, k, queue, tau);
  auto raw_loss = [&](const std::vector<double>& qq, const std::vector<double>& kk) {
    double pos = 0;
    for (int j = 0; j < 4; ++j) pos += qq[j] * kk[j];
    std::vector<double> l = {pos / tau};
    for (std::size_t i = 0; i < queue.size(); ++i) {
      double s = 0;
      for (int j = 0; j < 4; ++j) s += qq[j] * queue.at(i)[j];
      l.push_back(s / tau);
    }
    double m = l[0];
    for (double x : l) m = std::max(m, x);
    double z = 0;
    for (double x : l) z += std::exp(x - m);
    return m + std::log(z) - l[0];
  };
  for (int j = 0; j < 4; ++j) {
    auto qp = q, qm = q, kp = k, km = k;
    qp[j] += 1e-6;
    qm[j] -= 1e-6;
    kp[j] += 1e-6;
    km[j] -= 1e-6;
    EXPECT_NEAR(r.grad_q[j], (raw_loss(qp, k) - raw_loss(qm, k)) / 2e-6, 1e-6);
    EXPECT_NEAR(r.grad_k_pos[j], (raw_loss(q, kp) - raw_loss(q, km)) / 2e-6, 1e-6);
  }
}

TEST(InfoNce, EncoderChainMatchesFiniteDifferences) {
  for (std::uint64_t trial = 10; trial < 15; ++trial) {
    const toy::ContrastiveToy net(trial);
    const auto r = oracle::check_gradient(
        net.params, net.grad(net.params), 1e-6, [&](const auto& p) { return net.loss(p); },
        [&](const auto& a, const auto& b) { return net.pattern(a) == net.pattern(b); });
    EXPECT_LT(r.max_rel_error, 1e-3);
  }
}

TEST(CombinedLoss, WeightsAndErrors) {
  EXPECT_DOUBLE_EQ(combined_loss(1.5, 2.0), 3.5);
  EXPECT_DOUBLE_EQ(combined_loss(1.5, 2.0, {2.0, 0.5}), 4.0);
  EXPECT_THROW(combined_loss(std::nan(""), 1.0), std::invalid_argument);
}

TEST(Config, ValidationNamesTheField) {
  auto c = small_config();
  c.temperature = 0.0;
  try {
    c.validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_EQ(std::string(e.what()).rfind("temperature", 0), 0u);
  }
  c = small_config();
  c.slic.k_clusters = 0;
  try {
    c.validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_EQ(std::string(e.what()).rfind("slic.k_clusters", 0), 0u);
  }
}

TEST(LocalPatches, CropsHaveTheConfiguredSize) {
  const auto cfg = small_config();
  const auto imgs = small_images(3);
  for (const auto& img : imgs) {
    const auto patches = local_patch_views(img, cfg);
    ASSERT_FALSE(patches.empty());
    for (const auto& p : patches) {
      EXPECT_EQ(p.width(), cfg.patch_size);
      EXPECT_EQ(p.height(), cfg.patch_size);
    }
  }
  auto felz = cfg;
  felz.patch_method = PatchMethod::Felz;
  EXPECT_FALSE(local_patch_views(imgs[0], felz).empty());
}

TEST(Pretrainer, ZeroEpochsKeepsInitialisation) {
  auto cfg = small_config();
  cfg.epochs = 0;
  const auto r = pretrain(small_images(8), cfg, 5);
  EXPECT_EQ(r.prior_extractor, encoder::init_encoder(cfg.arch, derive_seed(5, 1)));
  EXPECT_TRUE(r.stats.epochs.empty());
}

TEST(Pretrainer, DeterministicAndLossIsFinite) {
  const auto cfg = small_config();
  const auto a = pretrain(small_images(8), cfg, 5);
  const auto b = pretrain(small_images(8), cfg, 5);
  EXPECT_EQ(a.prior_extractor, b.prior_extractor);
  EXPECT_EQ(a.stats.to_csv(), b.stats.to_csv());
  ASSERT_EQ(a.stats.epochs.size(), 2u);
  for (const auto& e : a.stats.epochs) {
    EXPECT_TRUE(std::isfinite(e.total_loss));
    EXPECT_GT(e.global_loss, 0.0);
    EXPECT_GT(e.local_loss, 0.0);
    EXPECT_NEAR(e.total_loss, e.global_loss + e.local_loss, 1e-12);
  }
  const auto c = pretrain(small_images(8), cfg, 6);
  EXPECT_NE(a.prior_extractor, c.prior_extractor);
}

TEST(Pretrainer, KeyEncoderTrailsQueryAndQueuesStayUnit) {
  const auto cfg = small_config();
  Pretrainer t(small_images(8), cfg, 3);
  t.run_epoch();
  EXPECT_NE(t.key_encoder(), t.query_encoder());
  for (std::size_t i = 0; i < t.global_queue().size(); ++i) {
    EXPECT_NEAR(encoder::l2_norm<float>(t.global_queue().at(i)), 1.0f, 1e-5f);
  }
}

TEST(Pretrainer, ResumeMatchesUninterruptedRun) {
  const fs::path d = fs::temp_directory_path() / "fsprior_contrastive_resume";
  fs::remove_all(d);
  fs::create_directories(d);
  auto cfg = small_config();
  cfg.epochs = 3;
  const auto imgs = small_images(8);
  Pretrainer full(imgs, cfg, 9);
  full.run(3);

  Pretrainer first(imgs, cfg, 9);
  first.run(1);
  first.save_state(d / "state.bin");
  Pretrainer second(imgs, cfg, 9);
  second.load_state(d / "state.bin");
  EXPECT_EQ(second.epochs_done(), 1);
  second.run(2);
  EXPECT_EQ(second.query_encoder(), full.query_encoder());
  EXPECT_EQ(second.key_encoder(), full.key_encoder());
  EXPECT_EQ(second.global_queue(), full.global_queue());
  EXPECT_EQ(second.local_queue(), full.local_queue());
  EXPECT_EQ(second.stats().to_csv(), full.stats().to_csv());
}

TEST(Pretrainer, StateFromAnotherSeedOrCorruptIsRejected) {
  const fs::path d = fs::temp_directory_path() / "fsprior_contrastive_state";
  fs::remove_all(d);
  fs::create_directories(d);
  const auto cfg = small_config();
  Pretrainer a(small_images(8), cfg, 1);
  a.save_state(d / "s.bin");
  Pretrainer b(small_images(8), cfg, 2);
  EXPECT_THROW(b.load_state(d / "s.bin"), IoError);
  write_file_atomic(d / "bad.bin", std::string_view("QGN1junk"));
  EXPECT_THROW(a.load_state(d / "bad.bin"), IoError);
}

TEST(Pretrainer, StatsCsvHasOneRowPerEpoch) {
  auto cfg = small_config();
  cfg.epochs = 3;
  const auto r = pretrain(small_images(8), cfg, 5);
  const auto csv = r.stats.to_csv();
  EXPECT_EQ(csv.rfind("epoch,l_global,l_local,l_total,pos_sim,neg_sim\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}
