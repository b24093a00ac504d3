#include "fsprior/encoder/sgd.hpp"

#include <cmath>
#include <stdexcept>

#include "fsprior/common/error.hpp"

namespace fsprior::encoder {

void sgd_step(std::span<float> params, std::span<const float> grads, std::span<float> velocity, double lr,
              double momentum, double weight_decay) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    throw std::invalid_argument("sgd_step: size mismatch");
  }
  for (float g : grads) {
    if (!std::isfinite(g)) throw DivergenceError();
  }
  const float flr = static_cast<float>(lr);
  const float fm = static_cast<float>(momentum);
  const float fwd = static_cast<float>(weight_decay);
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = fm * velocity[i] + (grads[i] + fwd * params[i]);
    params[i] -= flr * velocity[i];
  }
}

}  // namespace fsprior::encoder
