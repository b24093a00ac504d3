#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fsprior/encoder/tensor.hpp"

namespace fsprior::contrastive {

/// Fixed-capacity FIFO of unit-norm key embeddings (the negative dictionary).
/// Once full, each new key replaces the oldest one.
class EmbeddingQueue {
 public:
  static constexpr double kUnitTolerance = 1e-5;

  EmbeddingQueue(std::size_t capacity, int dim);

  std::size_t capacity() const { return capacity_; }
  int dim() const { return dim_; }
  std::size_t size() const { return fill_; }
  bool empty() const { return fill_ == 0; }
  /// Ring slot that the next key will be written to.
  std::size_t head() const { return head_; }

  /// Appends keys in order. Throws std::invalid_argument (leaving the queue
  /// untouched) when a key has the wrong dimension or is not unit-norm.
  void enqueue(std::span<const encoder::Embedding> keys);
  void enqueue(const encoder::Embedding& key) { enqueue(std::span(&key, 1)); }

  /// Entry by age: 0 is the oldest stored key.
  std::span<const float> at(std::size_t i) const;

  /// Occupied ring slots, contiguous, in slot order (not age order). Loss
  /// computations are order-free so they read this directly.
  std::span<const float> occupied() const {
    return {storage_.data(), fill_ * static_cast<std::size_t>(dim_)};
  }

  /// Raw state for checkpointing.
  std::span<const float> storage() const { return storage_; }
  void restore(std::vector<float> storage, std::size_t head, std::size_t fill);

  bool operator==(const EmbeddingQueue&) const = default;

 private:
  std::size_t capacity_;
  int dim_;
  std::size_t head_ = 0;
  std::size_t fill_ = 0;
  std::vector<float> storage_;
};

}  // namespace fsprior::contrastive
