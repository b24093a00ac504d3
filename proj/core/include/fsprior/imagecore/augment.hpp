#pragma once

#include <cstdint>
#include <utility>

#include "fsprior/imagecore/image.hpp"

namespace fsprior::imagecore {

/// Parameters of the view-generating augmentation: random resized crop,
/// horizontal flip, brightness/contrast/saturation jitter and Gaussian blur,
/// applied in that order.
struct AugSpec {
  double crop_scale_min = 0.5;  ///< fraction of the image area kept by the crop
  double crop_scale_max = 1.0;
  double flip_prob = 0.5;
  double color_jitter = 0.4;    ///< factors drawn from [1 - j, 1 + j]
  double blur_sigma_min = 0.0;
  double blur_sigma_max = 1.5;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;

  /// A spec under which both views equal the input.
  static AugSpec identity(std::uint64_t seed = 0);
};

inline constexpr int kMinAugmentSize = 8;

/// Two independently augmented views, both the size of `img`. The pair is a
/// pure function of (img, spec). Throws std::invalid_argument("image too
/// small") below kMinAugmentSize on either side.
std::pair<RgbImage, RgbImage> two_views(const RgbImage& img, const AugSpec& spec);

/// Separable Gaussian blur with edge clamping; sigma <= 0 returns the input.
RgbImage gaussian_blur(const RgbImage& img, double sigma);

}  // namespace fsprior::imagecore
