#include "fsprior/imagecore/color.hpp"

#include <algorithm>
#include <cmath>

namespace fsprior::imagecore {

namespace {

// D65 reference white, derived from the sRGB matrix row sums.
constexpr double kXn = 0.95047;
constexpr double kYn = 1.0;
constexpr double kZn = 1.08883;
constexpr double kDelta = 6.0 / 29.0;

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double c) {
  return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double lab_f(double t) {
  return t > kDelta * kDelta * kDelta ? std::cbrt(t) : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double lab_f_inv(double t) {
  return t > kDelta ? t * t * t : 3.0 * kDelta * kDelta * (t - 4.0 / 29.0);
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L));
}

}  // namespace

std::array<float, 3> rgb_to_lab(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const double r = srgb_to_linear(r8 / 255.0);
  const double g = srgb_to_linear(g8 / 255.0);
  const double b = srgb_to_linear(b8 / 255.0);
  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  const double fx = lab_f(x / kXn);
  const double fy = lab_f(y / kYn);
  const double fz = lab_f(z / kZn);
  return {static_cast<float>(116.0 * fy - 16.0), static_cast<float>(500.0 * (fx - fy)),
          static_cast<float>(200.0 * (fy - fz))};
}

std::array<std::uint8_t, 3> lab_to_rgb(float l, float a, float b) {
  const double fy = (l + 16.0) / 116.0;
  const double fx = fy + a / 500.0;
  const double fz = fy - b / 200.0;
  const double x = kXn * lab_f_inv(fx);
  const double y = kYn * lab_f_inv(fy);
  const double z = kZn * lab_f_inv(fz);
  const double rl = 3.2404542 * x - 1.5371385 * y - 0.4985314 * z;
  const double gl = -0.9692660 * x + 1.8760108 * y + 0.0415560 * z;
  const double bl = 0.0556434 * x - 0.2040259 * y + 1.0572252 * z;
  return {to_byte(linear_to_srgb(std::clamp(rl, 0.0, 1.0))),
          to_byte(linear_to_srgb(std::clamp(gl, 0.0, 1.0))),
          to_byte(linear_to_srgb(std::clamp(bl, 0.0, 1.0)))};
}

LabImage rgb_to_lab(const RgbImage& img) {
  LabImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto* p = img.pixel(x, y);
      const auto lab = rgb_to_lab(p[0], p[1], p[2]);
      std::copy(lab.begin(), lab.end(), out.pixel(x, y));
    }
  }
  return out;
}

RgbImage lab_to_rgb(const LabImage& img) {
  RgbImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto* p = img.pixel(x, y);
      const auto rgb = lab_to_rgb(p[0], p[1], p[2]);
      std::copy(rgb.begin(), rgb.end(), out.pixel(x, y));
    }
  }
  return out;
}

}  // namespace fsprior::imagecore
