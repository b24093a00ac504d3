#include "fsprior/patchgen/felz.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace fsprior::patchgen {

void FelzParams::validate() const {
  if (!(scale > 0.0)) throw std::invalid_argument("scale: must be > 0");
  if (min_component_size < 1) throw std::invalid_argument("min_component_size: must be >= 1");
  if (connectivity != 4 && connectivity != 8) throw std::invalid_argument("connectivity: must be 4 or 8");
}

namespace {

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n), size_(n, 1), internal_(n, 0.0f) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  std::int32_t find(std::int32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Joins two roots; the larger component becomes the root (lower index on ties).
  std::int32_t join(std::int32_t a, std::int32_t b, float weight) {
    if (size_[a] < size_[b] || (size_[a] == size_[b] && b < a)) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    internal_[a] = weight;
    return a;
  }

  int size(std::int32_t root) const { return size_[root]; }
  float internal(std::int32_t root) const { return internal_[root]; }

 private:
  std::vector<std::int32_t> parent_;
  std::vector<int> size_;
  std::vector<float> internal_;
};

float pixel_distance(const imagecore::RgbImage& img, std::int32_t i, std::int32_t j, EdgeWeight mode) {
  const auto* a = img.data().data() + 3 * static_cast<std::size_t>(i);
  const auto* b = img.data().data() + 3 * static_cast<std::size_t>(j);
  if (mode == EdgeWeight::Intensity) {
    const float ya = 0.299f * a[0] + 0.587f * a[1] + 0.114f * a[2];
    const float yb = 0.299f * b[0] + 0.587f * b[1] + 0.114f * b[2];
    return std::abs(ya - yb);
  }
  float acc = 0.0f;
  for (int c = 0; c < 3; ++c) {
    const float d = static_cast<float>(a[c]) - static_cast<float>(b[c]);
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace

std::vector<GraphEdge> build_sorted_edges(const imagecore::RgbImage& img, const FelzParams& p) {
  p.validate();
  const int w = img.width();
  const int h = img.height();
  std::vector<GraphEdge> edges;
  edges.reserve(img.pixel_count() * (p.connectivity == 8 ? 4 : 2));
  auto add = [&](int x0, int y0, int x1, int y1) {
    std::int32_t a = y0 * w + x0;
    std::int32_t b = y1 * w + x1;
    if (a > b) std::swap(a, b);
    edges.push_back({pixel_distance(img, a, b, p.weight), a, b});
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) add(x, y, x + 1, y);
      if (y + 1 < h) add(x, y, x, y + 1);
      if (p.connectivity == 8) {
        if (x + 1 < w && y + 1 < h) add(x, y, x + 1, y + 1);
        if (x > 0 && y + 1 < h) add(x, y, x - 1, y + 1);
      }
    }
  }
  std::sort(edges.begin(), edges.end(), [](const GraphEdge& l, const GraphEdge& r) {
    return std::tie(l.weight, l.a, l.b) < std::tie(r.weight, r.a, r.b);
  });
  return edges;
}

PatchSegmentation felz_segment(const imagecore::RgbImage& img, const FelzParams& p) {
  p.validate();
  if (img.empty()) throw std::invalid_argument("felz_segment: empty image");
  const auto edges = build_sorted_edges(img, p);
  DisjointSet sets(img.pixel_count());
  const double k = p.scale;

  for (const auto& e : edges) {
    const auto ra = sets.find(e.a);
    const auto rb = sets.find(e.b);
    if (ra == rb) continue;
    const double mint = std::min(sets.internal(ra) + k / sets.size(ra), sets.internal(rb) + k / sets.size(rb));
    if (e.weight <= mint) sets.join(ra, rb, e.weight);
  }

  for (const auto& e : edges) {
    const auto ra = sets.find(e.a);
    const auto rb = sets.find(e.b);
    if (ra == rb) continue;
    if (sets.size(ra) < p.min_component_size || sets.size(rb) < p.min_component_size) {
      sets.join(ra, rb, std::max({e.weight, sets.internal(ra), sets.internal(rb)}));
    }
  }

  PatchSegmentation seg;
  seg.width = img.width();
  seg.height = img.height();
  seg.labels.resize(img.pixel_count());
  for (std::size_t i = 0; i < seg.labels.size(); ++i) seg.labels[i] = sets.find(static_cast<std::int32_t>(i));
  if (p.connectivity == 8) {
    seg.labels = connected_components(seg.labels, seg.width, seg.height, 4);
  }
  seg.patch_count = relabel_raster_order(seg.labels);
  return seg;
}

}  // namespace fsprior::patchgen
