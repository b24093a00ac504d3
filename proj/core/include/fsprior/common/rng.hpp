#pragma once

#include <cstdint>
#include <random>

namespace fsprior {

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Derives a child seed from a parent seed and a list of stream ids.
template <typename... Ids>
std::uint64_t derive_seed(std::uint64_t seed, Ids... ids) {
  std::uint64_t s = mix_seed(seed);
  ((s = mix_seed(s ^ (static_cast<std::uint64_t>(ids) + 0x9e3779b97f4a7c15ULL))), ...);
  return s;
}

/// Seeded random source. The distributions are implemented here rather than
/// taken from <random> so that sequences are identical across standard
/// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  int below(int n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller (no cached second value).
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace fsprior
