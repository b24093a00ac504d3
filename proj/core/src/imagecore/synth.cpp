#include "fsprior/imagecore/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fsprior/common/rng.hpp"

namespace fsprior::imagecore {

namespace {

constexpr double kPi = std::numbers::pi;

constexpr std::array<std::array<int, 3>, kColorFamilies> kFamilyBase = {{
    {200, 60, 50},   // red
    {60, 180, 70},   // green
    {60, 80, 200},   // blue
    {210, 190, 50},  // yellow
}};

struct ShapeInstance {
  ShapeKind kind;
  double cx, cy, radius, angle, phase;
};

bool inside(const ShapeInstance& s, double px, double py) {
  const double dx = (px - s.cx) / s.radius;
  const double dy = (py - s.cy) / s.radius;
  const double c = std::cos(s.angle);
  const double sn = std::sin(s.angle);
  const double u = c * dx + sn * dy;
  const double v = -sn * dx + c * dy;
  const double r = std::hypot(u, v);
  switch (s.kind) {
    case ShapeKind::Disk:
      return r <= 1.0;
    case ShapeKind::Square:
      return std::abs(u) <= 0.8 && std::abs(v) <= 0.8;
    case ShapeKind::Triangle:
      return v >= -0.8 && v <= 0.8 && std::abs(u) <= (v + 0.8) * 0.6;
    case ShapeKind::Ring:
      return r >= 0.55 && r <= 1.0;
    case ShapeKind::Cross:
      return (std::abs(u) <= 0.3 && std::abs(v) <= 0.95) || (std::abs(v) <= 0.3 && std::abs(u) <= 0.95);
    case ShapeKind::Bar:
      return std::abs(u) <= 0.95 && std::abs(v) <= 0.28;
    case ShapeKind::Blob:
      return r <= 0.72 + 0.22 * std::sin(3.0 * std::atan2(v, u) + s.phase);
    case ShapeKind::AnnulusSector: {
      const double theta = std::atan2(v, u);  // (-pi, pi]
      return r >= 0.45 && r <= 1.0 && theta >= -kPi / 3.0;
    }
  }
  return false;
}

std::uint8_t clamp_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

LabeledImage render_sample(int classes, int size, Rng& rng) {
  LabeledImage s;
  s.class_id = rng.below(classes);
  s.image = RgbImage(size, size);
  s.mask = BinaryMask(size, size);

  // Background: muted tinted base, two oriented sinusoids and pixel noise.
  const double gray = rng.uniform(60.0, 190.0);
  std::array<double, 3> base{};
  for (auto& b : base) b = gray + rng.uniform(-25.0, 25.0);
  std::array<double, 2> freq{}, orient{}, wave_phase{};
  for (int i = 0; i < 2; ++i) {
    freq[i] = rng.uniform(0.15, 0.6);
    orient[i] = rng.uniform(0.0, kPi);
    wave_phase[i] = rng.uniform(0.0, 2.0 * kPi);
  }
  const double amplitude = rng.uniform(10.0, 30.0);

  // Foreground colour from the class family with per-sample jitter.
  const auto& fam = kFamilyBase[color_family_for_class(s.class_id)];
  std::array<double, 3> fg{};
  for (int c = 0; c < 3; ++c) fg[c] = fam[c] + rng.uniform(-30.0, 30.0);

  // Place the shape; retry until both classes are present in the mask.
  ShapeInstance shape{shape_for_class(s.class_id), 0, 0, 0, 0, 0};
  for (;;) {
    shape.radius = rng.uniform(0.22, 0.38) * size;
    shape.cx = rng.uniform(shape.radius * 0.8, size - shape.radius * 0.8);
    shape.cy = rng.uniform(shape.radius * 0.8, size - shape.radius * 0.8);
    shape.angle = rng.uniform(0.0, 2.0 * kPi);
    shape.phase = rng.uniform(0.0, 2.0 * kPi);
    std::size_t count = 0;
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) count += inside(shape, x + 0.5, y + 0.5) ? 1 : 0;
    }
    if (count > 0 && count < static_cast<std::size_t>(size) * size) break;
  }

  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      auto* p = s.image.pixel(x, y);
      const double noise = rng.uniform(-8.0, 8.0);
      if (inside(shape, x + 0.5, y + 0.5)) {
        s.mask.set(x, y, true);
        for (int c = 0; c < 3; ++c) p[c] = clamp_byte(fg[c] + noise);
      } else {
        double wave = 0.0;
        for (int i = 0; i < 2; ++i) {
          const double t = x * std::cos(orient[i]) + y * std::sin(orient[i]);
          wave += std::sin(freq[i] * t + wave_phase[i]);
        }
        for (int c = 0; c < 3; ++c) p[c] = clamp_byte(base[c] + amplitude * wave * 0.5 + noise);
      }
    }
  }
  return s;
}

}  // namespace

std::string_view shape_name(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Disk: return "disk";
    case ShapeKind::Square: return "square";
    case ShapeKind::Triangle: return "triangle";
    case ShapeKind::Ring: return "ring";
    case ShapeKind::Cross: return "cross";
    case ShapeKind::Bar: return "bar";
    case ShapeKind::Blob: return "blob";
    case ShapeKind::AnnulusSector: return "annulus-sector";
  }
  return "unknown";
}

ShapeKind shape_for_class(int class_id) { return static_cast<ShapeKind>(class_id % kShapeKinds); }

int color_family_for_class(int class_id) {
  return (class_id + class_id / kShapeKinds) % kColorFamilies;
}

std::vector<LabeledImage> synth_dataset(int n, int classes, int size, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("synth_dataset: n must be >= 1");
  if (classes < 2) throw std::invalid_argument("synth_dataset: classes must be >= 2");
  if (size < 8) throw std::invalid_argument("synth_dataset: size must be >= 8");
  std::vector<LabeledImage> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, i));
    out.push_back(render_sample(classes, size, rng));
  }
  return out;
}

}  // namespace fsprior::imagecore
