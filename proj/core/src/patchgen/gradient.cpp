#include "fsprior/patchgen/gradient.hpp"

#include <limits>
#include <stdexcept>

namespace fsprior::patchgen {

imagecore::Grid<float> gradient_map(const imagecore::LabImage& img) {
  if (img.width() < 3 || img.height() < 3) throw std::invalid_argument("gradient_map: image must be at least 3x3");
  imagecore::Grid<float> g(img.width(), img.height(), std::numeric_limits<float>::infinity());
  for (int y = 1; y + 1 < img.height(); ++y) {
    for (int x = 1; x + 1 < img.width(); ++x) {
      float acc = 0.0f;
      for (int c = 0; c < 3; ++c) {
        const float dx = img.at(x + 1, y, c) - img.at(x - 1, y, c);
        const float dy = img.at(x, y + 1, c) - img.at(x, y - 1, c);
        acc += dx * dx + dy * dy;
      }
      g.at(x, y) = acc;
    }
  }
  return g;
}

}  // namespace fsprior::patchgen
