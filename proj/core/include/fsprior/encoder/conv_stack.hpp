#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "fsprior/encoder/architecture.hpp"
#include "fsprior/encoder/tensor.hpp"

namespace fsprior::encoder {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-layer state kept by the forward pass for the backward pass.
template <typename T>
struct ConvLayerCache {
  int in_height = 0;
  int in_width = 0;
  int out_height = 0;
  int out_width = 0;
  RowMatrix<T> columns;  ///< im2col of the layer input
  RowMatrix<T> output;   ///< post-activation output, one row per cell
};

template <typename T>
struct ConvCache {
  std::vector<ConvLayerCache<T>> layers;
};

/// Runs `specs` over `input`. `params` holds every layer's weights and biases
/// back to back. When `cache` is non-null it receives what backward needs.
template <typename T>
Tensor3<T> conv_stack_forward(const std::vector<ConvSpec>& specs, std::span<const T> params, const Tensor3<T>& input,
                              ConvCache<T>* cache);

/// Accumulates parameter gradients into `grad_params` (same layout as
/// params) and returns the gradient w.r.t. the stack input when
/// `want_input_grad` is set (an empty tensor otherwise).
template <typename T>
Tensor3<T> conv_stack_backward(const std::vector<ConvSpec>& specs, std::span<const T> params,
                               const ConvCache<T>& cache, const Tensor3<T>& grad_output, std::span<T> grad_params,
                               bool want_input_grad);

}  // namespace fsprior::encoder
