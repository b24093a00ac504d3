#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fsprior::encoder {

/// One convolution with "same" zero padding ((kernel - 1) / 2).
struct ConvSpec {
  int kernel = 3;
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
  bool relu = true;

  /// Weights ((kernel*kernel*in) x out, row-major) followed by out biases.
  std::size_t parameter_count() const {
    return static_cast<std::size_t>(kernel) * kernel * in_channels * out_channels + out_channels;
  }
  int output_extent(int input_extent) const { return (input_extent + 2 * ((kernel - 1) / 2) - kernel) / stride + 1; }
  bool operator==(const ConvSpec&) const = default;
};

struct LinearSpec {
  int in_features = 0;
  int out_features = 0;

  std::size_t parameter_count() const {
    return static_cast<std::size_t>(in_features) * out_features + out_features;
  }
  bool operator==(const LinearSpec&) const = default;
};

/// Convolutional trunk plus a linear projection head applied to the
/// spatially averaged trunk output.
struct EncoderArchitecture {
  int input_channels = 3;
  int min_input = 32;
  std::vector<ConvSpec> convs;
  LinearSpec head;

  /// 3 x [conv3x3 -> bias -> ReLU], widths 16/32/64, stride 2 on the first
  /// two layers, then a 64 -> 32 projection.
  static EncoderArchitecture standard();

  /// Same layout with caller-chosen widths; used for small test networks.
  static EncoderArchitecture with_widths(int c1, int c2, int c3, int embed_dim, int min_input = 32);

  std::size_t trunk_parameter_count() const;
  std::size_t parameter_count() const { return trunk_parameter_count() + head.parameter_count(); }
  int feature_channels() const { return convs.empty() ? input_channels : convs.back().out_channels; }
  int embedding_dim() const { return head.out_features; }
  int output_extent(int input_extent) const;

  /// Throws std::invalid_argument when layers do not chain.
  void validate() const;

  std::string to_json() const;
  static EncoderArchitecture from_json(const std::string& text);

  bool operator==(const EncoderArchitecture&) const = default;
};

/// Decoder trunk: [features, guider, maps] -> convs -> 2 logits per cell.
struct DecoderArchitecture {
  int feature_channels = 64;
  int map_channels = 2;
  std::vector<ConvSpec> convs;

  /// Two conv3x3+ReLU layers of `hidden` width, then a 1x1 conv to 2 logits.
  static DecoderArchitecture standard(int feature_channels, int hidden = 32);

  int input_channels() const { return 2 * feature_channels + map_channels; }
  std::size_t parameter_count() const;
  void validate() const;

  std::string to_json() const;
  static DecoderArchitecture from_json(const std::string& text);

  bool operator==(const DecoderArchitecture&) const = default;
};

}  // namespace fsprior::encoder
