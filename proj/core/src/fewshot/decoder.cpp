#include "fsprior/fewshot/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fsprior/common/container.hpp"
#include "fsprior/common/error.hpp"
#include "fsprior/common/rng.hpp"

namespace fsprior::fewshot {

using imagecore::BinaryMask;

template <typename T>
std::vector<T> masked_pool(const Tensor3<T>& xs, const BinaryMask& ms) {
  if (ms.width() != xs.width || ms.height() != xs.height) throw std::invalid_argument("masked_pool: grid mismatch");
  std::vector<T> sum(static_cast<std::size_t>(xs.channels), T(0));
  std::size_t n = 0;
  for (std::size_t i = 0; i < xs.cells(); ++i) {
    if (!ms.get(i)) continue;
    const auto cell = xs.cell(i);
    for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += cell[c];
    ++n;
  }
  if (n == 0) throw std::invalid_argument("masked_pool: empty mask");
  for (auto& v : sum) v /= static_cast<T>(n);
  return sum;
}

DecoderParams init_decoder(const DecoderArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  DecoderParams p{arch, std::vector<float>(arch.parameter_count(), 0.0f)};
  Rng rng(seed);
  std::size_t offset = 0;
  for (const auto& c : arch.convs) {
    const std::size_t fan_in = static_cast<std::size_t>(c.kernel) * c.kernel * c.in_channels;
    // No ReLU after the logit layer, so it gets the plain 1/fan_in variance.
    const double std = std::sqrt((c.relu ? 2.0 : 1.0) / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < fan_in * c.out_channels; ++i) p.values[offset + i] = static_cast<float>(std * rng.normal());
    offset += c.parameter_count();
  }
  return p;
}

DecoderParams zero_decoder(const DecoderArchitecture& arch) {
  arch.validate();
  return DecoderParams{arch, std::vector<float>(arch.parameter_count(), 0.0f)};
}

void save_decoder(const std::filesystem::path& path, const DecoderParams& params) {
  if (params.values.size() != params.arch.parameter_count()) {
    throw std::invalid_argument("save_decoder: parameter count mismatch");
  }
  save_container(path, params.arch.to_json(), params.values);
}

DecoderParams load_decoder(const std::filesystem::path& path) {
  Container c = load_container(path);
  DecoderParams p;
  try {
    p.arch = DecoderArchitecture::from_json(c.header_json);
  } catch (const std::invalid_argument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (c.values.size() != p.arch.parameter_count()) {
    throw IoError(path.string() + ": parameter blob does not match architecture");
  }
  p.values = std::move(c.values);
  return p;
}

template <typename T>
Tensor3<T> decoder_input(const Tensor3<T>& xq, const Tensor3<T>& maps, std::span<const T> guider) {
  if (xq.height != maps.height || xq.width != maps.width) throw std::invalid_argument("decode: grid mismatch");
  if (guider.size() != static_cast<std::size_t>(xq.channels)) {
    throw std::invalid_argument("decode: guider and feature channels differ");
  }
  const int c_in = 2 * xq.channels + maps.channels;
  Tensor3<T> in(xq.height, xq.width, c_in);
  for (std::size_t i = 0; i < xq.cells(); ++i) {
    auto dst = in.cell(i);
    auto it = std::copy(xq.cell(i).begin(), xq.cell(i).end(), dst.begin());
    it = std::copy(guider.begin(), guider.end(), it);
    std::copy(maps.cell(i).begin(), maps.cell(i).end(), it);
  }
  return in;
}

template <typename T>
Tensor3<T> decode(const BasicDecoderParams<T>& params, const Tensor3<T>& xq, const Tensor3<T>& maps,
                  std::span<const T> guider, DecoderCache<T>* cache) {
  const auto& arch = params.arch;
  if (xq.channels != arch.feature_channels) throw std::invalid_argument("decode: feature channels differ from arch");
  if (maps.channels != arch.map_channels) throw std::invalid_argument("decode: map channels differ from arch");
  if (params.values.size() != arch.parameter_count()) throw std::invalid_argument("decode: parameter count mismatch");
  const Tensor3<T> in = decoder_input(xq, maps, guider);
  return encoder::conv_stack_forward<T>(arch.convs, params.values, in, cache ? &cache->convs : nullptr);
}

template <typename T>
DecoderInputGrad<T> decode_backward(const BasicDecoderParams<T>& params, const DecoderCache<T>& cache,
                                    const Tensor3<T>& grad_logits, std::span<T> grads) {
  if (grads.size() != params.values.size()) throw std::invalid_argument("decode_backward: gradient size mismatch");
  const Tensor3<T> g_in =
      encoder::conv_stack_backward<T>(params.arch.convs, params.values, cache.convs, grad_logits, grads, true);
  const int fc = params.arch.feature_channels;
  DecoderInputGrad<T> out{Tensor3<T>(g_in.height, g_in.width, fc), std::vector<T>(static_cast<std::size_t>(fc), T(0))};
  for (std::size_t i = 0; i < g_in.cells(); ++i) {
    const auto src = g_in.cell(i);
    auto dst = out.xq.cell(i);
    for (int c = 0; c < fc; ++c) {
      dst[c] = src[c];
      out.guider[c] += src[fc + c];
    }
  }
  return out;
}

template <typename T>
double cross_entropy(const Tensor3<T>& logits, const BinaryMask& gt, Tensor3<T>* grad) {
  if (logits.channels != 2 || logits.width != gt.width() || logits.height != gt.height()) {
    throw std::invalid_argument("cross_entropy: logits must be h x w x 2 on the mask grid");
  }
  const std::size_t n = logits.cells();
  if (grad) *grad = Tensor3<T>(logits.height, logits.width, 2);
  if (n == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z0 = logits.values[2 * i];
    const double z1 = logits.values[2 * i + 1];
    const double m = std::max(z0, z1);
    const double lse = m + std::log(std::exp(z0 - m) + std::exp(z1 - m));
    const int y = gt.get(i) ? 1 : 0;
    total += lse - (y ? z1 : z0);
    if (grad) {
      const double p1 = std::exp(z1 - lse);
      const double p0 = std::exp(z0 - lse);
      grad->values[2 * i] = static_cast<T>((p0 - (y == 0)) / static_cast<double>(n));
      grad->values[2 * i + 1] = static_cast<T>((p1 - (y == 1)) / static_cast<double>(n));
    }
  }
  return total / static_cast<double>(n);
}

BinaryMask predict_mask(const Tensor3<float>& logits) {
  if (logits.channels != 2) throw std::invalid_argument("predict_mask: expected 2 channels");
  BinaryMask m(logits.width, logits.height);
  for (std::size_t i = 0; i < logits.cells(); ++i) m.set(i, logits.values[2 * i + 1] > logits.values[2 * i]);
  return m;
}

BinaryMask predict_mask(const Tensor3<float>& logits, int width, int height) {
  if (logits.channels != 2) throw std::invalid_argument("predict_mask: expected 2 channels");
  if (width <= 0 || height <= 0 || logits.cells() == 0) throw std::invalid_argument("predict_mask: empty size");
  BinaryMask m(width, height);
  auto coord = [](int i, int out, int in, int& i0, int& i1, double& t) {
    const double s = std::clamp((i + 0.5) * in / out - 0.5, 0.0, static_cast<double>(in - 1));
    i0 = static_cast<int>(std::floor(s));
    i1 = std::min(i0 + 1, in - 1);
    t = s - i0;
  };
  for (int y = 0; y < height; ++y) {
    int y0, y1;
    double ty;
    coord(y, height, logits.height, y0, y1, ty);
    for (int x = 0; x < width; ++x) {
      int x0, x1;
      double tx;
      coord(x, width, logits.width, x0, x1, tx);
      // Interpolating the logit difference is the same as interpolating both channels.
      auto d = [&](int yy, int xx) {
        return static_cast<double>(logits.at(yy, xx, 1)) - static_cast<double>(logits.at(yy, xx, 0));
      };
      const double v = (1 - ty) * ((1 - tx) * d(y0, x0) + tx * d(y0, x1)) + ty * ((1 - tx) * d(y1, x0) + tx * d(y1, x1));
      m.set(x, y, v > 0.0);
    }
  }
  return m;
}

#define FSPRIOR_INSTANTIATE(T)                                                                                       \
  template std::vector<T> masked_pool<T>(const Tensor3<T>&, const BinaryMask&);                                      \
  template Tensor3<T> decoder_input<T>(const Tensor3<T>&, const Tensor3<T>&, std::span<const T>);                    \
  template Tensor3<T> decode<T>(const BasicDecoderParams<T>&, const Tensor3<T>&, const Tensor3<T>&,                  \
                                std::span<const T>, DecoderCache<T>*);                                               \
  template DecoderInputGrad<T> decode_backward<T>(const BasicDecoderParams<T>&, const DecoderCache<T>&,              \
                                                  const Tensor3<T>&, std::span<T>);                                  \
  template double cross_entropy<T>(const Tensor3<T>&, const BinaryMask&, Tensor3<T>*);

FSPRIOR_INSTANTIATE(float)
FSPRIOR_INSTANTIATE(double)

}  // namespace fsprior::fewshot
