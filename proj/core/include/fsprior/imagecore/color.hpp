#pragma once

#include <array>
#include <cstdint>

#include "fsprior/imagecore/image.hpp"

namespace fsprior::imagecore {

/// sRGB (D65) to CIE-Lab for a single pixel.
std::array<float, 3> rgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b);
std::array<std::uint8_t, 3> lab_to_rgb(float l, float a, float b);

LabImage rgb_to_lab(const RgbImage& img);
RgbImage lab_to_rgb(const LabImage& img);

}  // namespace fsprior::imagecore
