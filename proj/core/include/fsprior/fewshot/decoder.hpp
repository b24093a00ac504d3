#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fsprior/encoder/architecture.hpp"
#include "fsprior/encoder/conv_stack.hpp"
#include "fsprior/encoder/tensor.hpp"
#include "fsprior/imagecore/image.hpp"

namespace fsprior::fewshot {

using encoder::DecoderArchitecture;
using encoder::Tensor3;

/// Mean of the feature vectors under mask cells. The mask must already be on
/// the feature grid. Throws std::invalid_argument on size mismatch or an
/// empty mask.
template <typename T>
std::vector<T> masked_pool(const Tensor3<T>& xs, const imagecore::BinaryMask& ms);

template <typename T>
struct BasicDecoderParams {
  DecoderArchitecture arch;
  std::vector<T> values;

  template <typename U>
  BasicDecoderParams<U> cast() const {
    return {arch, std::vector<U>(values.begin(), values.end())};
  }
  bool operator==(const BasicDecoderParams&) const = default;
};

using DecoderParams = BasicDecoderParams<float>;

/// He-normal weights, zero biases.
DecoderParams init_decoder(const DecoderArchitecture& arch, std::uint64_t seed);
DecoderParams zero_decoder(const DecoderArchitecture& arch);

/// Same container as encoder checkpoints, with a decoder descriptor header.
void save_decoder(const std::filesystem::path& path, const DecoderParams& params);
DecoderParams load_decoder(const std::filesystem::path& path);

/// Per-cell [xq, guider, maps] concatenation.
template <typename T>
Tensor3<T> decoder_input(const Tensor3<T>& xq, const Tensor3<T>& maps, std::span<const T> guider);

template <typename T>
struct DecoderCache {
  encoder::ConvCache<T> convs;
};

/// h x w x 2 logits. Throws std::invalid_argument when grids or channel
/// counts disagree with the architecture.
template <typename T>
Tensor3<T> decode(const BasicDecoderParams<T>& params, const Tensor3<T>& xq, const Tensor3<T>& maps,
                  std::span<const T> guider, DecoderCache<T>* cache = nullptr);

template <typename T>
struct DecoderInputGrad {
  Tensor3<T> xq;
  std::vector<T> guider;
};

/// Adds parameter gradients into `grads` and returns the gradients for the
/// bridge features and the guider (maps are treated as constants).
template <typename T>
DecoderInputGrad<T> decode_backward(const BasicDecoderParams<T>& params, const DecoderCache<T>& cache,
                                    const Tensor3<T>& grad_logits, std::span<T> grads);

/// Mean softmax cross-entropy over cells; label 1 where `gt` is set. When
/// `grad` is non-null it receives dL/dlogits.
template <typename T>
double cross_entropy(const Tensor3<T>& logits, const imagecore::BinaryMask& gt, Tensor3<T>* grad = nullptr);

/// Per-cell argmax (ties go to background).
imagecore::BinaryMask predict_mask(const Tensor3<float>& logits);

/// Bilinear upsampling of the logits to image size, then argmax.
imagecore::BinaryMask predict_mask(const Tensor3<float>& logits, int width, int height);

}  // namespace fsprior::fewshot
