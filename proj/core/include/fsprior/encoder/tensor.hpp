#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fsprior::encoder {

/// Dense h x w x C grid, row-major with channels innermost.
template <typename T>
struct Tensor3 {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<T> values;

  Tensor3() = default;
  Tensor3(int h, int w, int c, T fill = T{})
      : height(h), width(w), channels(c), values(static_cast<std::size_t>(h) * w * c, fill) {
    if (h < 0 || w < 0 || c < 0) throw std::invalid_argument("tensor dimensions must be non-negative");
  }

  std::size_t cells() const { return static_cast<std::size_t>(height) * width; }
  T& at(int y, int x, int c) { return values[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  const T& at(int y, int x, int c) const { return values[(static_cast<std::size_t>(y) * width + x) * channels + c]; }

  /// The C-vector of cell i (raster order).
  std::span<T> cell(std::size_t i) { return {values.data() + i * channels, static_cast<std::size_t>(channels)}; }
  std::span<const T> cell(std::size_t i) const {
    return {values.data() + i * channels, static_cast<std::size_t>(channels)};
  }

  bool same_shape(const Tensor3& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
  bool operator==(const Tensor3&) const = default;

  template <typename U>
  Tensor3<U> cast() const {
    Tensor3<U> out(height, width, channels);
    for (std::size_t i = 0; i < values.size(); ++i) out.values[i] = static_cast<U>(values[i]);
    return out;
  }
};

using FeatureMap = Tensor3<float>;

/// C-dimensional embedding. `normalized` is false for the zero vector, which
/// is kept as zero rather than divided by a zero norm.
template <typename T>
struct BasicEmbedding {
  std::vector<T> values;
  bool normalized = false;

  std::size_t dim() const { return values.size(); }
  bool operator==(const BasicEmbedding&) const = default;
};

using Embedding = BasicEmbedding<float>;

template <typename T>
T l2_norm(std::span<const T> v) {
  T acc = 0;
  for (T x : v) acc += x * x;
  return std::sqrt(acc);
}

template <typename T>
BasicEmbedding<T> normalize_embedding(std::vector<T> raw) {
  const T norm = l2_norm<T>(raw);
  BasicEmbedding<T> e;
  if (norm == T(0)) {
    e.values.assign(raw.size(), T(0));
    e.normalized = false;
    return e;
  }
  for (auto& x : raw) x /= norm;
  e.values = std::move(raw);
  e.normalized = true;
  return e;
}

template <typename T>
T dot(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  T acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace fsprior::encoder
