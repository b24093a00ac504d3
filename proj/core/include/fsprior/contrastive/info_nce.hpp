#pragma once

#include <span>
#include <vector>

#include "fsprior/contrastive/queue.hpp"

namespace fsprior::contrastive {

template <typename T>
struct InfoNceResult {
  T loss = 0;
  std::vector<T> grad_q;
  std::vector<T> grad_k_pos;
  double positive_similarity = 0.0;       ///< q . k+
  double mean_negative_similarity = 0.0;  ///< mean of q . k_i over the queue
};

/// -log( exp(q.k+/tau) / (exp(q.k+/tau) + sum_i exp(q.k_i/tau)) ) over the
/// queue entries k_i, evaluated with a stable log-sum-exp. Queue entries are
/// constants; gradients are w.r.t. q and k+ only.
/// Throws std::invalid_argument for tau <= 0, an empty queue, a dimension
/// mismatch, or q / k+ that are not unit-norm (tolerance 1e-4).
template <typename T>
InfoNceResult<T> info_nce(std::span<const T> q, std::span<const T> k_pos, const EmbeddingQueue& queue, double tau);

/// Patch-level loss. Same functional form as info_nce, evaluated against the
/// patch queue.
template <typename T>
InfoNceResult<T> local_info_nce(std::span<const T> q_patch, std::span<const T> k_patch_pos,
                                const EmbeddingQueue& patch_queue, double tau) {
  return info_nce<T>(q_patch, k_patch_pos, patch_queue, tau);
}

struct LossWeights {
  double global = 1.0;
  double local = 1.0;
};

/// weights.global * global + weights.local * local. Throws on non-finite input.
double combined_loss(double global, double local, LossWeights weights = {});

}  // namespace fsprior::contrastive
