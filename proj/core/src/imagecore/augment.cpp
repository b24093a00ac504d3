#include "fsprior/imagecore/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fsprior/common/rng.hpp"
#include "fsprior/imagecore/resize.hpp"

namespace fsprior::imagecore {

void AugSpec::validate() const {
  if (!(crop_scale_min > 0.0 && crop_scale_min <= crop_scale_max && crop_scale_max <= 1.0)) {
    throw std::invalid_argument("crop_scale_min: need 0 < crop_scale_min <= crop_scale_max <= 1");
  }
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) throw std::invalid_argument("flip_prob: must be in [0,1]");
  if (!(color_jitter >= 0.0 && color_jitter < 1.0)) throw std::invalid_argument("color_jitter: must be in [0,1)");
  if (!(blur_sigma_min >= 0.0 && blur_sigma_min <= blur_sigma_max)) {
    throw std::invalid_argument("blur_sigma_min: need 0 <= blur_sigma_min <= blur_sigma_max");
  }
}

AugSpec AugSpec::identity(std::uint64_t seed) {
  AugSpec s;
  s.crop_scale_min = s.crop_scale_max = 1.0;
  s.flip_prob = 0.0;
  s.color_jitter = 0.0;
  s.blur_sigma_min = s.blur_sigma_max = 0.0;
  s.seed = seed;
  return s;
}

RgbImage gaussian_blur(const RgbImage& img, double sigma) {
  if (sigma <= 0.0) return img;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    total += kernel[i + radius];
  }
  for (auto& k : kernel) k /= total;

  const int w = img.width();
  const int h = img.height();
  std::vector<double> tmp(img.data().size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += kernel[i + radius] * img.at(std::clamp(x + i, 0, w - 1), y, c);
        }
        tmp[(static_cast<std::size_t>(y) * w + x) * 3 + c] = acc;
      }
    }
  }
  RgbImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += kernel[i + radius] * tmp[(static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w + x) * 3 + c];
        }
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
      }
    }
  }
  return out;
}

namespace {

RgbImage color_jitter(const RgbImage& img, double brightness, double contrast, double saturation) {
  const std::size_t n = img.pixel_count();
  std::vector<double> v(img.data().begin(), img.data().end());
  for (auto& x : v) x *= brightness;

  double mean_gray = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_gray += 0.299 * v[3 * i] + 0.587 * v[3 * i + 1] + 0.114 * v[3 * i + 2];
  }
  mean_gray /= static_cast<double>(n);
  for (auto& x : v) x = mean_gray + (x - mean_gray) * contrast;

  for (std::size_t i = 0; i < n; ++i) {
    const double gray = 0.299 * v[3 * i] + 0.587 * v[3 * i + 1] + 0.114 * v[3 * i + 2];
    for (int c = 0; c < 3; ++c) v[3 * i + c] = gray + (v[3 * i + c] - gray) * saturation;
  }

  RgbImage out(img.width(), img.height());
  auto dst = out.data();
  for (std::size_t i = 0; i < v.size(); ++i) {
    dst[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v[i]), 0L, 255L));
  }
  return out;
}

RgbImage augment_once(const RgbImage& img, const AugSpec& spec, Rng& rng) {
  const int w = img.width();
  const int h = img.height();

  const double scale = rng.uniform(spec.crop_scale_min, spec.crop_scale_max);
  const double side = std::sqrt(scale);
  const int cw = std::clamp(static_cast<int>(std::lround(side * w)), 1, w);
  const int ch = std::clamp(static_cast<int>(std::lround(side * h)), 1, h);
  const int cx = rng.below(w - cw + 1);
  const int cy = rng.below(h - ch + 1);
  RgbImage view = crop_resize(img, Box{cx, cy, cw, ch}, w, h);

  if (rng.bernoulli(spec.flip_prob)) view = flip_horizontal(view);

  const double j = spec.color_jitter;
  const double brightness = rng.uniform(1.0 - j, 1.0 + j);
  const double contrast = rng.uniform(1.0 - j, 1.0 + j);
  const double saturation = rng.uniform(1.0 - j, 1.0 + j);
  if (j > 0.0) view = color_jitter(view, brightness, contrast, saturation);

  const double sigma = rng.uniform(spec.blur_sigma_min, spec.blur_sigma_max);
  return gaussian_blur(view, sigma);
}

}  // namespace

std::pair<RgbImage, RgbImage> two_views(const RgbImage& img, const AugSpec& spec) {
  spec.validate();
  if (img.width() < kMinAugmentSize || img.height() < kMinAugmentSize) {
    throw std::invalid_argument("image too small");
  }
  Rng rng(spec.seed);
  RgbImage first = augment_once(img, spec, rng);
  RgbImage second = augment_once(img, spec, rng);
  return {std::move(first), std::move(second)};
}

}  // namespace fsprior::imagecore
