#include "fsprior/encoder/conv_stack.hpp"

#include <algorithm>
#include <stdexcept>

namespace fsprior::encoder {

namespace {

template <typename T>
RowMatrix<T> im2col(const T* input, int height, int width, int channels, const ConvSpec& spec, int out_h,
                    int out_w) {
  const int k = spec.kernel;
  const int pad = (k - 1) / 2;
  RowMatrix<T> col = RowMatrix<T>::Zero(static_cast<Eigen::Index>(out_h) * out_w,
                                        static_cast<Eigen::Index>(k) * k * channels);
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      T* row = col.data() + (static_cast<Eigen::Index>(oy) * out_w + ox) * col.cols();
      for (int ky = 0; ky < k; ++ky) {
        const int iy = oy * spec.stride - pad + ky;
        if (iy < 0 || iy >= height) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int ix = ox * spec.stride - pad + kx;
          if (ix < 0 || ix >= width) continue;
          const T* src = input + (static_cast<std::size_t>(iy) * width + ix) * channels;
          std::copy(src, src + channels, row + (ky * k + kx) * channels);
        }
      }
    }
  }
  return col;
}

template <typename T>
void col2im_add(const RowMatrix<T>& dcol, T* grad_input, int height, int width, int channels, const ConvSpec& spec,
                int out_h, int out_w) {
  const int k = spec.kernel;
  const int pad = (k - 1) / 2;
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      const T* row = dcol.data() + (static_cast<Eigen::Index>(oy) * out_w + ox) * dcol.cols();
      for (int ky = 0; ky < k; ++ky) {
        const int iy = oy * spec.stride - pad + ky;
        if (iy < 0 || iy >= height) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int ix = ox * spec.stride - pad + kx;
          if (ix < 0 || ix >= width) continue;
          T* dst = grad_input + (static_cast<std::size_t>(iy) * width + ix) * channels;
          const T* src = row + (ky * k + kx) * channels;
          for (int c = 0; c < channels; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

std::size_t total_params(const std::vector<ConvSpec>& specs) {
  std::size_t n = 0;
  for (const auto& s : specs) n += s.parameter_count();
  return n;
}

}  // namespace

template <typename T>
Tensor3<T> conv_stack_forward(const std::vector<ConvSpec>& specs, std::span<const T> params, const Tensor3<T>& input,
                              ConvCache<T>* cache) {
  if (params.size() < total_params(specs)) throw std::invalid_argument("conv stack: parameter vector too short");
  if (cache != nullptr) cache->layers.clear();

  Tensor3<T> current = input;
  std::size_t offset = 0;
  for (const auto& spec : specs) {
    if (current.channels != spec.in_channels) throw std::invalid_argument("conv stack: input channel mismatch");
    const int out_h = spec.output_extent(current.height);
    const int out_w = spec.output_extent(current.width);
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("conv stack: input too small");

    const Eigen::Index fan_in = static_cast<Eigen::Index>(spec.kernel) * spec.kernel * spec.in_channels;
    Eigen::Map<const RowMatrix<T>> weights(params.data() + offset, fan_in, spec.out_channels);
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bias(params.data() + offset + fan_in * spec.out_channels,
                                                               spec.out_channels);
    offset += spec.parameter_count();

    RowMatrix<T> col = im2col(current.values.data(), current.height, current.width, current.channels, spec, out_h, out_w);
    RowMatrix<T> out = col * weights;
    out.rowwise() += bias;
    if (spec.relu) out = out.cwiseMax(T(0));

    Tensor3<T> next(out_h, out_w, spec.out_channels);
    std::copy(out.data(), out.data() + out.size(), next.values.begin());
    if (cache != nullptr) {
      cache->layers.push_back(
          ConvLayerCache<T>{current.height, current.width, out_h, out_w, std::move(col), std::move(out)});
    }
    current = std::move(next);
  }
  return current;
}

template <typename T>
Tensor3<T> conv_stack_backward(const std::vector<ConvSpec>& specs, std::span<const T> params,
                               const ConvCache<T>& cache, const Tensor3<T>& grad_output, std::span<T> grad_params,
                               bool want_input_grad) {
  if (cache.layers.size() != specs.size()) throw std::invalid_argument("conv stack: cache does not match layers");
  if (grad_params.size() < total_params(specs)) throw std::invalid_argument("conv stack: gradient vector too short");
  const auto& last = cache.layers.back();
  if (grad_output.height != last.out_height || grad_output.width != last.out_width ||
      grad_output.channels != specs.back().out_channels) {
    throw std::invalid_argument("conv stack: output gradient shape mismatch");
  }

  std::vector<std::size_t> offsets(specs.size());
  std::size_t offset = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    offsets[i] = offset;
    offset += specs[i].parameter_count();
  }

  RowMatrix<T> grad = Eigen::Map<const RowMatrix<T>>(grad_output.values.data(),
                                                     static_cast<Eigen::Index>(grad_output.cells()),
                                                     grad_output.channels);
  Tensor3<T> grad_input;
  for (std::size_t li = specs.size(); li-- > 0;) {
    const auto& spec = specs[li];
    const auto& lc = cache.layers[li];
    if (spec.relu) grad = (lc.output.array() > T(0)).select(grad, T(0));

    const Eigen::Index fan_in = static_cast<Eigen::Index>(spec.kernel) * spec.kernel * spec.in_channels;
    Eigen::Map<RowMatrix<T>> dw(grad_params.data() + offsets[li], fan_in, spec.out_channels);
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> db(grad_params.data() + offsets[li] + fan_in * spec.out_channels,
                                                       spec.out_channels);
    dw.noalias() += lc.columns.transpose() * grad;
    db += grad.colwise().sum();

    if (li == 0 && !want_input_grad) break;

    Eigen::Map<const RowMatrix<T>> weights(params.data() + offsets[li], fan_in, spec.out_channels);
    const RowMatrix<T> dcol = grad * weights.transpose();
    Tensor3<T> dinput(lc.in_height, lc.in_width, spec.in_channels);
    col2im_add(dcol, dinput.values.data(), lc.in_height, lc.in_width, spec.in_channels, spec, lc.out_height,
               lc.out_width);
    if (li == 0) {
      grad_input = std::move(dinput);
    } else {
      grad = Eigen::Map<const RowMatrix<T>>(dinput.values.data(), static_cast<Eigen::Index>(dinput.cells()),
                                            dinput.channels);
    }
  }
  return grad_input;
}

template Tensor3<float> conv_stack_forward(const std::vector<ConvSpec>&, std::span<const float>,
                                           const Tensor3<float>&, ConvCache<float>*);
template Tensor3<double> conv_stack_forward(const std::vector<ConvSpec>&, std::span<const double>,
                                            const Tensor3<double>&, ConvCache<double>*);
template Tensor3<float> conv_stack_backward(const std::vector<ConvSpec>&, std::span<const float>,
                                            const ConvCache<float>&, const Tensor3<float>&, std::span<float>, bool);
template Tensor3<double> conv_stack_backward(const std::vector<ConvSpec>&, std::span<const double>,
                                             const ConvCache<double>&, const Tensor3<double>&, std::span<double>,
                                             bool);

}  // namespace fsprior::encoder
