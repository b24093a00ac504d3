#include "fsprior/contrastive/pretrain.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "fsprior/common/container.hpp"
#include "fsprior/common/error.hpp"
#include "fsprior/common/rng.hpp"
#include "fsprior/imagecore/color.hpp"
#include "fsprior/patchgen/patches.hpp"

namespace fsprior::contrastive {

using encoder::EncoderParams;
using imagecore::RgbImage;

namespace {

enum SeedStream : std::uint64_t {
  kInitStream = 1,
  kGlobalQueueStream = 2,
  kLocalQueueStream = 3,
  kOrderStream = 10,
  kStepStream = 11,
};

void fill_random_unit(EmbeddingQueue& queue, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<encoder::Embedding> keys;
  keys.reserve(queue.capacity());
  for (std::size_t i = 0; i < queue.capacity(); ++i) {
    std::vector<float> v(static_cast<std::size_t>(queue.dim()));
    for (auto& x : v) x = static_cast<float>(rng.normal());
    keys.push_back(encoder::normalize_embedding(std::move(v)));
  }
  queue.enqueue(keys);
}

struct ForwardItem {
  encoder::EncoderCache<float> cache;
  std::vector<float> grad_q;
};

nlohmann::json queue_header(const EmbeddingQueue& q) {
  return {{"capacity", q.capacity()}, {"dim", q.dim()}, {"head", q.head()}, {"fill", q.size()}};
}

}  // namespace

void ContrastiveConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument(field + ": " + why);
  };
  if (!(temperature > 0.0)) fail("temperature", "must be > 0");
  if (batch_size < 1) fail("batch_size", "must be >= 1");
  if (queue_capacity < static_cast<std::size_t>(batch_size)) fail("queue_capacity", "must be >= batch_size");
  if (epochs < 0) fail("epochs", "must be >= 0");
  if (!std::isfinite(weights.global) || weights.global < 0) fail("weights.global", "must be finite and >= 0");
  if (!std::isfinite(weights.local) || weights.local < 0) fail("weights.local", "must be finite and >= 0");
  if (!(momentum >= 0.0 && momentum <= 1.0)) fail("momentum", "must be in [0,1]");
  if (min_patch_area < 1) fail("min_patch_area", "must be >= 1");
  if (patches_per_image < 0) fail("patches_per_image", "must be >= 0");
  if (patch_size < arch.min_input) fail("patch_size", "must be >= the encoder's min_input");
  if (slic_target_patch_area < 0) fail("slic_target_patch_area", "must be >= 0");
  auto nested = [](const std::string& group, auto&& check) {
    try {
      check();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(group + "." + e.what());
    }
  };
  nested("slic", [&] { slic.validate(); });
  nested("felz", [&] { felz.validate(); });
  nested("augment", [&] { augment.validate(); });
  nested("arch", [&] { arch.validate(); });
  if (!(sgd.learning_rate >= 0.0)) fail("sgd.learning_rate", "must be >= 0");
}

std::string PretrainStats::to_csv() const {
  std::string out = "epoch,l_global,l_local,l_total,pos_sim,neg_sim\n";
  char line[256];
  for (const auto& e : epochs) {
    std::snprintf(line, sizeof(line), "%d,%.8f,%.8f,%.8f,%.8f,%.8f\n", e.epoch, e.global_loss, e.local_loss,
                  e.total_loss, e.positive_similarity, e.negative_similarity);
    out += line;
  }
  return out;
}

std::vector<RgbImage> local_patch_views(const RgbImage& view, const ContrastiveConfig& config) {
  patchgen::PatchSegmentation seg;
  if (config.patch_method == PatchMethod::Slic) {
    auto params = config.slic;
    if (config.slic_target_patch_area > 0) {
      const double k = static_cast<double>(view.pixel_count()) / config.slic_target_patch_area;
      params.k_clusters = std::max(1, static_cast<int>(std::lround(k)));
    }
    seg = patchgen::slic_segment(imagecore::rgb_to_lab(view), params);
  } else {
    seg = patchgen::felz_segment(view, config.felz);
  }
  auto crops = patchgen::extract_patches(view, seg, config.min_patch_area, config.patch_size);
  std::vector<RgbImage> out;
  out.reserve(crops.size());
  for (auto& c : crops) out.push_back(std::move(c.pixels));
  return out;
}

Pretrainer::Pretrainer(std::vector<RgbImage> images, ContrastiveConfig config, std::uint64_t seed)
    : Pretrainer(std::move(images), config, seed, encoder::init_encoder(config.arch, derive_seed(seed, kInitStream))) {}

Pretrainer::Pretrainer(std::vector<RgbImage> images, ContrastiveConfig config, std::uint64_t seed,
                       EncoderParams init)
    : images_(std::move(images)),
      config_(std::move(config)),
      seed_(seed),
      query_(std::move(init)),
      key_(query_),
      optimizer_(query_.values.size(), config_.sgd),
      global_queue_(config_.queue_capacity, config_.arch.embedding_dim()),
      local_queue_(config_.queue_capacity, config_.arch.embedding_dim()) {
  config_.validate();
  if (images_.empty()) throw std::invalid_argument("pretrain: dataset is empty");
  if (!(query_.arch == config_.arch)) throw std::invalid_argument("pretrain: initial parameters do not match arch");
  fill_random_unit(global_queue_, derive_seed(seed_, kGlobalQueueStream));
  fill_random_unit(local_queue_, derive_seed(seed_, kLocalQueueStream));
}

void Pretrainer::run_epoch() {
  const int epoch = epochs_done_ + 1;
  std::vector<std::size_t> order(images_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed_, kOrderStream, epoch));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  EpochStats acc;
  acc.epoch = epoch;
  int images_seen = 0;
  int patches_seen = 0;
  const std::size_t bs = static_cast<std::size_t>(config_.batch_size);
  for (std::size_t start = 0; start < order.size(); start += bs) {
    const std::size_t len = std::min(bs, order.size() - start);
    step(std::span(order).subspan(start, len), epoch, acc, images_seen, patches_seen);
  }

  const int pairs = images_seen + patches_seen;
  acc.global_loss /= std::max(images_seen, 1);
  acc.local_loss = patches_seen > 0 ? acc.local_loss / patches_seen : 0.0;
  acc.total_loss = combined_loss(acc.global_loss, acc.local_loss, config_.weights);
  acc.positive_similarity /= std::max(pairs, 1);
  acc.negative_similarity /= std::max(pairs, 1);
  stats_.epochs.push_back(acc);
  epochs_done_ = epoch;
}

void Pretrainer::step(std::span<const std::size_t> batch, int epoch, EpochStats& acc, int& images_seen,
                      int& patches_seen) {
  const double tau = config_.temperature;
  std::vector<ForwardItem> global_items;
  std::vector<ForwardItem> local_items;
  std::vector<encoder::Embedding> global_keys;
  std::vector<encoder::Embedding> local_keys;

  auto run_pair = [&](const RgbImage& query_view, const RgbImage& key_view, const EmbeddingQueue& queue,
                      std::vector<ForwardItem>& items, std::vector<encoder::Embedding>& keys, double& loss_acc) {
    ForwardItem item;
    const auto q = encoder::encoder_forward(query_, query_view, &item.cache);
    const auto k = encoder::encoder_forward(key_, key_view);
    if (!q.embedding.normalized || !k.embedding.normalized) return false;
    auto r = info_nce<float>(q.embedding.values, k.embedding.values, queue, tau);
    loss_acc += r.loss;
    acc.positive_similarity += r.positive_similarity;
    acc.negative_similarity += r.mean_negative_similarity;
    item.grad_q = std::move(r.grad_q);
    items.push_back(std::move(item));
    keys.push_back(k.embedding);
    return true;
  };

  for (std::size_t index : batch) {
    const std::uint64_t step_seed = derive_seed(seed_, kStepStream, epoch, index);
    auto aug = config_.augment;
    aug.seed = derive_seed(step_seed, 0);
    const auto [view_q, view_k] = imagecore::two_views(images_[index], aug);
    if (run_pair(view_q, view_k, global_queue_, global_items, global_keys, acc.global_loss)) ++images_seen;

    if (config_.patches_per_image == 0 || config_.weights.local == 0.0) continue;
    auto patches = local_patch_views(view_q, config_);
    if (patches.empty()) {
      ++acc.skipped_local;
      continue;
    }
    Rng pick(derive_seed(step_seed, 1));
    const std::size_t take = std::min(patches.size(), static_cast<std::size_t>(config_.patches_per_image));
    for (std::size_t j = 0; j < take; ++j) std::swap(patches[j], patches[j + pick.below(patches.size() - j)]);
    for (std::size_t j = 0; j < take; ++j) {
      auto patch_aug = config_.augment;
      patch_aug.seed = derive_seed(step_seed, 2, j);
      const auto [pq, pk] = imagecore::two_views(patches[j], patch_aug);
      if (run_pair(pq, pk, local_queue_, local_items, local_keys, acc.local_loss)) ++patches_seen;
    }
  }

  std::vector<float> grads(query_.values.size(), 0.0f);
  const encoder::Tensor3<float> no_feature_grad;
  auto backprop = [&](std::vector<ForwardItem>& items, double weight) {
    if (items.empty()) return;
    const float scale = static_cast<float>(weight / static_cast<double>(items.size()));
    for (auto& item : items) {
      for (auto& g : item.grad_q) g *= scale;
      encoder::encoder_backward<float>(query_, item.cache, no_feature_grad, item.grad_q, grads);
    }
  };
  backprop(global_items, config_.weights.global);
  backprop(local_items, config_.weights.local);

  optimizer_.step(query_.values, grads);
  encoder::momentum_update(key_, query_, config_.momentum);
  global_queue_.enqueue(global_keys);
  local_queue_.enqueue(local_keys);
}

void Pretrainer::save_state(const std::filesystem::path& path) const {
  nlohmann::ordered_json header;
  header["kind"] = "pretrain_state";
  header["seed"] = seed_;
  header["epochs_done"] = epochs_done_;
  header["arch"] = nlohmann::json::parse(query_.arch.to_json());
  header["global_queue"] = queue_header(global_queue_);
  header["local_queue"] = queue_header(local_queue_);
  header["stats"] = nlohmann::json::array();
  for (const auto& e : stats_.epochs) {
    header["stats"].push_back({e.epoch, e.global_loss, e.local_loss, e.total_loss, e.positive_similarity,
                               e.negative_similarity, e.skipped_local});
  }

  std::vector<float> blob;
  auto append = [&](std::span<const float> s) { blob.insert(blob.end(), s.begin(), s.end()); };
  append(query_.values);
  append(key_.values);
  append(optimizer_.velocity());
  append(global_queue_.storage());
  append(local_queue_.storage());
  save_container(path, header.dump(), blob);
}

void Pretrainer::load_state(const std::filesystem::path& path) {
  const Container c = load_container(path);
  try {
    const auto header = nlohmann::json::parse(c.header_json);
    if (header.at("kind").get<std::string>() != "pretrain_state") throw IoError("not a pretrain state file");
    if (header.at("seed").get<std::uint64_t>() != seed_) throw IoError("state was written with a different seed");
    if (!(encoder::EncoderArchitecture::from_json(header.at("arch").dump()) == query_.arch)) {
      throw IoError("state architecture does not match the configuration");
    }
    const std::size_t np = query_.values.size();
    const std::size_t gq = global_queue_.storage().size();
    const std::size_t lq = local_queue_.storage().size();
    if (c.values.size() != 3 * np + gq + lq) throw IoError("state payload has the wrong size");
    const auto& g = header.at("global_queue");
    const auto& l = header.at("local_queue");
    if (g.at("capacity").get<std::size_t>() != global_queue_.capacity() ||
        l.at("capacity").get<std::size_t>() != local_queue_.capacity()) {
      throw IoError("state queue capacity does not match the configuration");
    }

    auto it = c.values.begin();
    auto take = [&](std::size_t n) {
      std::vector<float> v(it, it + static_cast<std::ptrdiff_t>(n));
      it += static_cast<std::ptrdiff_t>(n);
      return v;
    };
    query_.values = take(np);
    key_.values = take(np);
    const auto velocity = take(np);
    std::copy(velocity.begin(), velocity.end(), optimizer_.velocity().begin());
    global_queue_.restore(take(gq), g.at("head").get<std::size_t>(), g.at("fill").get<std::size_t>());
    local_queue_.restore(take(lq), l.at("head").get<std::size_t>(), l.at("fill").get<std::size_t>());

    stats_.epochs.clear();
    for (const auto& row : header.at("stats")) {
      stats_.epochs.push_back(EpochStats{row.at(0).get<int>(), row.at(1).get<double>(), row.at(2).get<double>(),
                                         row.at(3).get<double>(), row.at(4).get<double>(), row.at(5).get<double>(),
                                         row.at(6).get<int>()});
    }
    epochs_done_ = header.at("epochs_done").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": bad pretrain state header: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

PretrainResult pretrain(const std::vector<RgbImage>& images, const ContrastiveConfig& config, std::uint64_t seed) {
  Pretrainer trainer(images, config, seed);
  trainer.run(config.epochs);
  return {trainer.query_encoder(), trainer.stats()};
}

}  // namespace fsprior::contrastive
