#pragma once

#include "fsprior/imagecore/image.hpp"

namespace fsprior::patchgen {

/// Squared central-difference gradient magnitude over the Lab vector:
///   G(x,y) = |I(x+1,y) - I(x-1,y)|^2 + |I(x,y+1) - I(x,y-1)|^2.
/// Border pixels are +inf so they are never chosen as a seed position.
/// Throws std::invalid_argument for images smaller than 3x3.
imagecore::Grid<float> gradient_map(const imagecore::LabImage& img);

}  // namespace fsprior::patchgen
