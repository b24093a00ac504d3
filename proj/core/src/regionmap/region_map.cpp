#include "fsprior/regionmap/region_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "fsprior/common/error.hpp"
#include "fsprior/encoder/checkpoint.hpp"
#include "fsprior/imagecore/png_io.hpp"

namespace fsprior::regionmap {

using encoder::FeatureMap;
using imagecore::BinaryMask;

double cosine(std::span<const float> x, std::span<const float> p) {
  if (x.size() != p.size()) throw std::invalid_argument("cosine: dimension mismatch");
  double dot = 0.0, nx = 0.0, np = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += static_cast<double>(x[i]) * p[i];
    nx += static_cast<double>(x[i]) * x[i];
    np += static_cast<double>(p[i]) * p[i];
  }
  if (nx == 0.0 || np == 0.0) return 0.0;
  return dot / std::sqrt(nx * np);
}

RegionMap normalize_map(std::span<const double> raw, int height, int width) {
  if (height < 0 || width < 0 || raw.size() != static_cast<std::size_t>(height) * width) {
    throw std::invalid_argument("normalize_map: size mismatch");
  }
  RegionMap out(height, width);
  if (raw.empty()) return out;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : raw) {
    if (!std::isfinite(v)) throw std::invalid_argument("normalize_map: non-finite value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double denom = hi - lo + kNormalizeEpsilon;
  for (std::size_t i = 0; i < raw.size(); ++i) out.values[i] = static_cast<float>((raw[i] - lo) / denom);
  return out;
}

std::vector<double> max_cosine(const FeatureMap& query, const FeatureMap& keys, std::span<const std::uint8_t> key_mask) {
  if (query.channels != keys.channels) throw std::invalid_argument("feature channel mismatch");
  if (!key_mask.empty() && key_mask.size() != keys.cells()) throw std::invalid_argument("key mask size mismatch");
  std::vector<double> out(query.cells(), 0.0);
  // Masked-out keys act as zero vectors, whose cosine is 0.
  const bool any_masked_out =
      !key_mask.empty() && std::any_of(key_mask.begin(), key_mask.end(), [](std::uint8_t m) { return m == 0; });
  for (std::size_t q = 0; q < query.cells(); ++q) {
    double best = any_masked_out ? 0.0 : -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < keys.cells(); ++k) {
      if (!key_mask.empty() && key_mask[k] == 0) continue;
      best = std::max(best, cosine(query.cell(q), keys.cell(k)));
    }
    out[q] = keys.cells() == 0 ? 0.0 : best;
  }
  return out;
}

RegionMap prior_region_map(const FeatureMap& xq, const FeatureMap& pq) {
  if (xq.height != pq.height || xq.width != pq.width) throw std::invalid_argument("prior_region_map: grid mismatch");
  if (xq.channels != pq.channels) throw std::invalid_argument("prior_region_map: channel mismatch");
  return normalize_map(max_cosine(xq, pq), xq.height, xq.width);
}

BinaryMask mask_to_grid(const BinaryMask& mask, int height, int width) {
  if (mask.height() == height && mask.width() == width) return mask;
  return imagecore::resize_nearest(mask, width, height);
}

namespace {

std::vector<double> guided_raw(const FeatureMap& xq, const FeatureMap& xs, const BinaryMask& ms) {
  if (xq.channels != xs.channels) throw std::invalid_argument("guided_region_map: channel mismatch");
  const BinaryMask grid = mask_to_grid(ms, xs.height, xs.width);
  if (grid.count() == 0) throw std::invalid_argument("empty support mask");
  return max_cosine(xq, xs, grid.values());
}

}  // namespace

RegionMap guided_region_map(const FeatureMap& xq, const FeatureMap& xs, const BinaryMask& ms) {
  if (xq.height != xs.height || xq.width != xs.width) throw std::invalid_argument("guided_region_map: grid mismatch");
  return normalize_map(guided_raw(xq, xs, ms), xq.height, xq.width);
}

RegionMap guided_region_map(const FeatureMap& xq, std::span<const FeatureMap> xs, std::span<const BinaryMask> ms) {
  if (xs.empty() || xs.size() != ms.size()) throw std::invalid_argument("guided_region_map: need one mask per support");
  std::vector<double> raw;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xq.height != xs[i].height || xq.width != xs[i].width) {
      throw std::invalid_argument("guided_region_map: grid mismatch");
    }
    auto r = guided_raw(xq, xs[i], ms[i]);
    if (raw.empty()) {
      raw = std::move(r);
    } else {
      for (std::size_t c = 0; c < raw.size(); ++c) raw[c] = std::max(raw[c], r[c]);
    }
  }
  return normalize_map(raw, xq.height, xq.width);
}

BinaryRegion threshold_region(const RegionMap& map, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("threshold_region: alpha must lie in [0,1]");
  BinaryRegion out(map.width, map.height);
  for (std::size_t i = 0; i < map.values.size(); ++i) out.set(i, map.values[i] > alpha);
  return out;
}

FeatureMap fuse_maps(const RegionMap& prior, const RegionMap& guided, Polarity polarity) {
  if (prior.height != guided.height || prior.width != guided.width) {
    throw std::invalid_argument("fuse_maps: grid mismatch");
  }
  FeatureMap out(prior.height, prior.width, 2);
  for (std::size_t i = 0; i < prior.values.size(); ++i) {
    const float p = prior.values[i];
    out.values[2 * i] = polarity == Polarity::InvertedPrior ? 1.0f - p : p;
    out.values[2 * i + 1] = guided.values[i];
  }
  return out;
}

imagecore::Grid<std::uint8_t> to_gray8(const RegionMap& map) {
  imagecore::Grid<std::uint8_t> g(map.width, map.height);
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    const double v = std::clamp(static_cast<double>(map.values[i]), 0.0, 1.0);
    g.values[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return g;
}

void write_map_png(const std::filesystem::path& path, const RegionMap& map) { imagecore::write_png(path, to_gray8(map)); }

void save_map(const std::filesystem::path& path, const RegionMap& map) {
  FeatureMap t(map.height, map.width, 1);
  t.values = map.values;
  encoder::save_tensor(path, t);
}

RegionMap load_map(const std::filesystem::path& path) {
  const FeatureMap t = encoder::load_tensor(path);
  if (t.channels != 1) throw IoError(path.string() + ": region map must have one channel");
  RegionMap m(t.height, t.width);
  m.values = t.values;
  return m;
}

}  // namespace fsprior::regionmap
