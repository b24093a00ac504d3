#include "fsprior/encoder/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "fsprior/common/rng.hpp"

namespace fsprior::encoder {

EncoderParams init_encoder(const EncoderArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  EncoderParams p{arch, std::vector<float>(arch.parameter_count(), 0.0f)};
  Rng rng(seed);
  std::size_t offset = 0;
  for (const auto& c : arch.convs) {
    const std::size_t fan_in = static_cast<std::size_t>(c.kernel) * c.kernel * c.in_channels;
    const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < fan_in * c.out_channels; ++i) p.values[offset + i] = static_cast<float>(std * rng.normal());
    offset += c.parameter_count();
  }
  const double head_std = std::sqrt(1.0 / arch.head.in_features);
  for (std::size_t i = 0; i < static_cast<std::size_t>(arch.head.in_features) * arch.head.out_features; ++i) {
    p.values[offset + i] = static_cast<float>(head_std * rng.normal());
  }
  return p;
}

EncoderParams zero_encoder(const EncoderArchitecture& arch) {
  arch.validate();
  return EncoderParams{arch, std::vector<float>(arch.parameter_count(), 0.0f)};
}

template <typename T>
Tensor3<T> image_to_tensor(const imagecore::RgbImage& img) {
  Tensor3<T> t(img.height(), img.width(), 3);
  const auto src = img.data();
  for (std::size_t i = 0; i < src.size(); ++i) t.values[i] = static_cast<T>(src[i]) / T(255) - T(0.5);
  return t;
}

template <typename T>
EncoderOutput<T> encoder_forward(const BasicEncoderParams<T>& params, const Tensor3<T>& input, EncoderCache<T>* cache) {
  const auto& arch = params.arch;
  if (params.values.size() != arch.parameter_count()) throw std::invalid_argument("encoder: parameter count mismatch");
  if (input.channels != arch.input_channels) throw std::invalid_argument("encoder: input channel mismatch");
  if (input.height < arch.min_input || input.width < arch.min_input) {
    throw std::invalid_argument("encoder: input smaller than architecture minimum (" +
                                std::to_string(arch.min_input) + ")");
  }

  EncoderOutput<T> out;
  out.features = conv_stack_forward<T>(arch.convs, params.trunk(), input, cache ? &cache->trunk : nullptr);

  const int c = out.features.channels;
  std::vector<T> pooled(static_cast<std::size_t>(c), T(0));
  for (std::size_t i = 0; i < out.features.cells(); ++i) {
    const auto cell = out.features.cell(i);
    for (int k = 0; k < c; ++k) pooled[k] += cell[k];
  }
  const T inv = T(1) / static_cast<T>(out.features.cells());
  for (auto& v : pooled) v *= inv;

  const auto head = params.head();
  const int d = arch.head.out_features;
  std::vector<T> proj(head.begin() + static_cast<std::ptrdiff_t>(c) * d, head.end());
  for (int i = 0; i < c; ++i) {
    const T pi = pooled[i];
    if (pi == T(0)) continue;
    for (int j = 0; j < d; ++j) proj[j] += pi * head[static_cast<std::size_t>(i) * d + j];
  }

  if (cache != nullptr) {
    cache->pooled = pooled;
    cache->projection = proj;
    cache->projection_norm = l2_norm<T>(proj);
  }
  out.embedding = normalize_embedding(std::move(proj));
  return out;
}

template <typename T>
void encoder_backward(const BasicEncoderParams<T>& params, const EncoderCache<T>& cache,
                      const Tensor3<T>& grad_features, std::span<const T> grad_embedding, std::span<T> grads) {
  const auto& arch = params.arch;
  if (grads.size() != arch.parameter_count()) throw std::invalid_argument("encoder backward: gradient size mismatch");
  if (cache.trunk.layers.size() != arch.convs.size()) throw std::invalid_argument("encoder backward: stale cache");
  const auto& last = cache.trunk.layers.back();
  const int c = arch.feature_channels();
  const int d = arch.head.out_features;
  const std::size_t cells = static_cast<std::size_t>(last.out_height) * last.out_width;

  Tensor3<T> dfeat(last.out_height, last.out_width, c);
  if (!grad_features.values.empty()) {
    if (grad_features.height != last.out_height || grad_features.width != last.out_width ||
        grad_features.channels != c) {
      throw std::invalid_argument("encoder backward: feature gradient shape mismatch");
    }
    dfeat.values = grad_features.values;
  }

  if (!grad_embedding.empty()) {
    if (grad_embedding.size() != static_cast<std::size_t>(d)) {
      throw std::invalid_argument("encoder backward: embedding gradient shape mismatch");
    }
    // Through e = p / |p|: dp = (g - e (e.g)) / |p|; zero when |p| == 0.
    std::vector<T> dproj(static_cast<std::size_t>(d), T(0));
    const T norm = cache.projection_norm;
    if (norm > T(0)) {
      T eg = 0;
      for (int j = 0; j < d; ++j) eg += cache.projection[j] / norm * grad_embedding[j];
      for (int j = 0; j < d; ++j) dproj[j] = (grad_embedding[j] - cache.projection[j] / norm * eg) / norm;
    }
    const std::size_t head_offset = arch.trunk_parameter_count();
    const auto head = params.head();
    std::vector<T> dpooled(static_cast<std::size_t>(c), T(0));
    for (int i = 0; i < c; ++i) {
      for (int j = 0; j < d; ++j) {
        grads[head_offset + static_cast<std::size_t>(i) * d + j] += cache.pooled[i] * dproj[j];
        dpooled[i] += head[static_cast<std::size_t>(i) * d + j] * dproj[j];
      }
    }
    for (int j = 0; j < d; ++j) grads[head_offset + static_cast<std::size_t>(c) * d + j] += dproj[j];

    const T inv = T(1) / static_cast<T>(cells);
    for (std::size_t i = 0; i < cells; ++i) {
      for (int k = 0; k < c; ++k) dfeat.values[i * c + k] += dpooled[k] * inv;
    }
  }

  conv_stack_backward<T>(arch.convs, params.trunk(), cache.trunk, dfeat,
                         grads.subspan(0, arch.trunk_parameter_count()), false);
}

void momentum_update(EncoderParams& key, const EncoderParams& query, double mu) {
  if (!(key.arch == query.arch) || key.values.size() != query.values.size()) {
    throw std::invalid_argument("momentum_update: architecture mismatch");
  }
  const float m = static_cast<float>(mu);
  const float one_minus = static_cast<float>(1.0 - mu);
  for (std::size_t i = 0; i < key.values.size(); ++i) {
    key.values[i] = m * key.values[i] + one_minus * query.values[i];
  }
}

template Tensor3<float> image_to_tensor<float>(const imagecore::RgbImage&);
template Tensor3<double> image_to_tensor<double>(const imagecore::RgbImage&);
template EncoderOutput<float> encoder_forward(const BasicEncoderParams<float>&, const Tensor3<float>&,
                                              EncoderCache<float>*);
template EncoderOutput<double> encoder_forward(const BasicEncoderParams<double>&, const Tensor3<double>&,
                                               EncoderCache<double>*);
template void encoder_backward(const BasicEncoderParams<float>&, const EncoderCache<float>&, const Tensor3<float>&,
                               std::span<const float>, std::span<float>);
template void encoder_backward(const BasicEncoderParams<double>&, const EncoderCache<double>&,
                               const Tensor3<double>&, std::span<const double>, std::span<double>);

}  // namespace fsprior::encoder
