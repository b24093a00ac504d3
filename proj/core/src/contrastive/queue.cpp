#include "fsprior/contrastive/queue.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fsprior::contrastive {

EmbeddingQueue::EmbeddingQueue(std::size_t capacity, int dim) : capacity_(capacity), dim_(dim) {
  if (capacity == 0) throw std::invalid_argument("EmbeddingQueue: capacity must be positive");
  if (dim <= 0) throw std::invalid_argument("EmbeddingQueue: dim must be positive");
  storage_.assign(capacity * static_cast<std::size_t>(dim), 0.0f);
}

void EmbeddingQueue::enqueue(std::span<const encoder::Embedding> keys) {
  for (const auto& k : keys) {
    if (k.values.size() != static_cast<std::size_t>(dim_)) {
      throw std::invalid_argument("EmbeddingQueue: key dimension mismatch");
    }
    double n2 = 0.0;
    for (float v : k.values) n2 += static_cast<double>(v) * v;
    if (!k.normalized || std::abs(std::sqrt(n2) - 1.0) > kUnitTolerance) {
      throw std::invalid_argument("EmbeddingQueue: key is not unit-norm");
    }
  }
  for (const auto& k : keys) {
    std::copy(k.values.begin(), k.values.end(), storage_.begin() + static_cast<std::ptrdiff_t>(head_ * dim_));
    head_ = (head_ + 1) % capacity_;
    fill_ = std::min(fill_ + 1, capacity_);
  }
}

std::span<const float> EmbeddingQueue::at(std::size_t i) const {
  if (i >= fill_) throw std::out_of_range("EmbeddingQueue::at");
  const std::size_t oldest = fill_ < capacity_ ? 0 : head_;
  const std::size_t slot = (oldest + i) % capacity_;
  return {storage_.data() + slot * dim_, static_cast<std::size_t>(dim_)};
}

void EmbeddingQueue::restore(std::vector<float> storage, std::size_t head, std::size_t fill) {
  if (storage.size() != capacity_ * static_cast<std::size_t>(dim_) || head >= capacity_ || fill > capacity_ ||
      (fill < capacity_ && head != fill)) {
    throw std::invalid_argument("EmbeddingQueue::restore: inconsistent state");
  }
  storage_ = std::move(storage);
  head_ = head;
  fill_ = fill;
}

}  // namespace fsprior::contrastive
