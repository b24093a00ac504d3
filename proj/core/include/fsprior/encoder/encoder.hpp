#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fsprior/encoder/architecture.hpp"
#include "fsprior/encoder/conv_stack.hpp"
#include "fsprior/encoder/tensor.hpp"
#include "fsprior/imagecore/image.hpp"

namespace fsprior::encoder {

/// Flat parameter vector for an encoder: trunk layers in order, then the
/// projection head (weights in x out row-major, then biases).
template <typename T>
struct BasicEncoderParams {
  EncoderArchitecture arch;
  std::vector<T> values;

  std::span<const T> trunk() const { return {values.data(), arch.trunk_parameter_count()}; }
  std::span<const T> head() const {
    return {values.data() + arch.trunk_parameter_count(), arch.head.parameter_count()};
  }

  template <typename U>
  BasicEncoderParams<U> cast() const {
    return {arch, std::vector<U>(values.begin(), values.end())};
  }
  bool operator==(const BasicEncoderParams&) const = default;
};

using EncoderParams = BasicEncoderParams<float>;

/// He-normal weights, zero biases; a pure function of (arch, seed).
EncoderParams init_encoder(const EncoderArchitecture& arch, std::uint64_t seed);

/// All-zero parameters.
EncoderParams zero_encoder(const EncoderArchitecture& arch);

template <typename T>
struct EncoderOutput {
  Tensor3<T> features;         ///< h x w x C trunk output (stride 4 by default)
  BasicEmbedding<T> embedding; ///< L2-normalised projection of the pooled trunk
};

template <typename T>
struct EncoderCache {
  ConvCache<T> trunk;
  std::vector<T> pooled;
  std::vector<T> projection;
  T projection_norm = 0;
};

/// Pixel bytes to network input: v / 255 - 0.5.
template <typename T>
Tensor3<T> image_to_tensor(const imagecore::RgbImage& img);

/// Throws std::invalid_argument when the input is smaller than
/// arch.min_input or has the wrong channel count.
template <typename T>
EncoderOutput<T> encoder_forward(const BasicEncoderParams<T>& params, const Tensor3<T>& input,
                                 EncoderCache<T>* cache = nullptr);

template <typename T>
EncoderOutput<T> encoder_forward(const BasicEncoderParams<T>& params, const imagecore::RgbImage& img,
                                 EncoderCache<T>* cache = nullptr) {
  return encoder_forward(params, image_to_tensor<T>(img), cache);
}

/// Parameter gradients given upstream gradients for the feature map and the
/// embedding (either may be empty, meaning zero). Adds into `grads`, which
/// must be parameter-sized. Throws std::invalid_argument on shape mismatch.
template <typename T>
void encoder_backward(const BasicEncoderParams<T>& params, const EncoderCache<T>& cache,
                      const Tensor3<T>& grad_features, std::span<const T> grad_embedding, std::span<T> grads);

/// key <- mu * key + (1 - mu) * query, elementwise. Throws on architecture
/// mismatch.
void momentum_update(EncoderParams& key, const EncoderParams& query, double mu);

}  // namespace fsprior::encoder
