#include "fsprior/contrastive/info_nce.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fsprior::contrastive {

namespace {

template <typename T>
void require_unit(std::span<const T> v, const char* what) {
  double n2 = 0.0;
  for (T x : v) n2 += static_cast<double>(x) * static_cast<double>(x);
  if (std::abs(std::sqrt(n2) - 1.0) > 1e-4) throw std::invalid_argument(std::string("info_nce: ") + what + " is not unit-norm");
}

}  // namespace

template <typename T>
InfoNceResult<T> info_nce(std::span<const T> q, std::span<const T> k_pos, const EmbeddingQueue& queue, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("info_nce: temperature must be > 0");
  if (queue.empty()) throw std::invalid_argument("info_nce: empty queue");
  const std::size_t d = static_cast<std::size_t>(queue.dim());
  if (q.size() != d || k_pos.size() != d) throw std::invalid_argument("info_nce: dimension mismatch");
  require_unit(q, "q");
  require_unit(k_pos, "k+");

  const T inv_tau = static_cast<T>(1.0 / tau);
  const std::size_t n = queue.size();
  const auto keys = queue.occupied();

  std::vector<T> logits(n + 1);
  T pos = 0;
  for (std::size_t j = 0; j < d; ++j) pos += q[j] * k_pos[j];
  logits[0] = pos * inv_tau;
  double neg_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const float* k = keys.data() + i * d;
    T s = 0;
    for (std::size_t j = 0; j < d; ++j) s += q[j] * static_cast<T>(k[j]);
    neg_sum += static_cast<double>(s);
    logits[i + 1] = s * inv_tau;
  }

  const T m = *std::max_element(logits.begin(), logits.end());
  T z = 0;
  for (auto& l : logits) {
    l = std::exp(l - m);
    z += l;
  }

  InfoNceResult<T> r;
  r.loss = m + std::log(z) - pos * inv_tau;
  r.positive_similarity = static_cast<double>(pos);
  r.mean_negative_similarity = neg_sum / static_cast<double>(n);

  // logits now hold unnormalised probabilities.
  r.grad_q.assign(d, T(0));
  const T p0 = logits[0] / z;
  for (std::size_t j = 0; j < d; ++j) r.grad_q[j] = (p0 - T(1)) * k_pos[j];
  for (std::size_t i = 0; i < n; ++i) {
    const T p = logits[i + 1] / z;
    if (p == T(0)) continue;
    const float* k = keys.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) r.grad_q[j] += p * static_cast<T>(k[j]);
  }
  for (auto& g : r.grad_q) g *= inv_tau;

  r.grad_k_pos.resize(d);
  for (std::size_t j = 0; j < d; ++j) r.grad_k_pos[j] = (p0 - T(1)) * q[j] * inv_tau;
  return r;
}

double combined_loss(double global, double local, LossWeights weights) {
  if (!std::isfinite(global) || !std::isfinite(local)) throw std::invalid_argument("combined_loss: non-finite loss");
  return weights.global * global + weights.local * local;
}

template InfoNceResult<float> info_nce(std::span<const float>, std::span<const float>, const EmbeddingQueue&, double);
template InfoNceResult<double> info_nce(std::span<const double>, std::span<const double>, const EmbeddingQueue&,
                                        double);

}  // namespace fsprior::contrastive
