#pragma once

#include <span>
#include <vector>

namespace fsprior::encoder {

struct SgdConfig {
  double learning_rate = 0.03;
  double momentum = 0.9;
  double weight_decay = 1e-4;
};

/// Classic momentum SGD:
///   v <- momentum * v + (g + weight_decay * w)
///   w <- w - lr * v
/// Throws DivergenceError (without touching anything) when a gradient is not
/// finite, and std::invalid_argument when the spans differ in size.
void sgd_step(std::span<float> params, std::span<const float> grads, std::span<float> velocity, double lr,
              double momentum, double weight_decay);

/// Holds the velocity buffer for one parameter vector.
class SgdOptimizer {
 public:
  SgdOptimizer() = default;
  SgdOptimizer(std::size_t size, SgdConfig config) : config_(config), velocity_(size, 0.0f) {}

  void step(std::span<float> params, std::span<const float> grads) {
    sgd_step(params, grads, velocity_, config_.learning_rate, config_.momentum, config_.weight_decay);
  }

  const SgdConfig& config() const { return config_; }
  std::span<const float> velocity() const { return velocity_; }
  std::span<float> velocity() { return velocity_; }

 private:
  SgdConfig config_;
  std::vector<float> velocity_;
};

}  // namespace fsprior::encoder
