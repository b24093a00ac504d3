#include "fsprior/patchgen/slic.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fsprior/patchgen/gradient.hpp"

namespace fsprior::patchgen {

void SlicParams::validate() const {
  if (k_clusters < 1) throw std::invalid_argument("k_clusters: must be >= 1");
  if (!(compactness > 0.0)) throw std::invalid_argument("compactness: must be > 0");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations: must be >= 1");
  if (!(residual_threshold >= 0.0)) throw std::invalid_argument("residual_threshold: must be >= 0");
  if (recenter_window < 1 || recenter_window % 2 == 0) {
    throw std::invalid_argument("recenter_window: must be a positive odd number");
  }
}

double slic_interval(int width, int height, int k_clusters) {
  return std::sqrt(static_cast<double>(width) * height / k_clusters);
}

std::pair<int, int> slic_grid(int width, int height, int k_clusters) {
  const double s = slic_interval(width, height, k_clusters);
  int cols = std::max(1, static_cast<int>(std::lround(width / s)));
  int rows = std::max(1, static_cast<int>(std::lround(height / s)));
  cols = std::min(cols, width);
  rows = std::min(rows, height);
  // Too many seeds: coarsen the more finely divided axis.
  while (cols * rows > k_clusters) {
    const double cell_w = static_cast<double>(width) / cols;
    const double cell_h = static_cast<double>(height) / rows;
    if (cell_w < cell_h && cols > 1) {
      --cols;
    } else if (rows > 1) {
      --rows;
    } else {
      --cols;
    }
  }
  // Room left: split the longer cell side while that stays within K.
  for (;;) {
    const double cell_w = static_cast<double>(width) / cols;
    const double cell_h = static_cast<double>(height) / rows;
    if (cell_w >= cell_h) {
      if ((cols + 1) * rows > k_clusters || cols + 1 > width) break;
      ++cols;
    } else {
      if (cols * (rows + 1) > k_clusters || rows + 1 > height) break;
      ++rows;
    }
  }
  return {cols, rows};
}

std::vector<SlicCenter> slic_initial_centers(const imagecore::LabImage& img, const SlicParams& p) {
  p.validate();
  const int w = img.width();
  const int h = img.height();
  const auto [cols, rows] = slic_grid(w, h, p.k_clusters);
  const auto grad = gradient_map(img);
  const double step_x = static_cast<double>(w) / cols;
  const double step_y = static_cast<double>(h) / rows;
  const int half = p.recenter_window / 2;

  std::vector<SlicCenter> centers;
  centers.reserve(static_cast<std::size_t>(cols) * rows);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      SlicCenter ctr;
      ctr.x = (c + 0.5) * step_x - 0.5;
      ctr.y = (r + 0.5) * step_y - 0.5;
      int px = std::clamp(static_cast<int>(std::lround(ctr.x)), 0, w - 1);
      int py = std::clamp(static_cast<int>(std::lround(ctr.y)), 0, h - 1);

      float best = grad.at(px, py);
      int bx = px;
      int by = py;
      for (int dy = -half; dy <= half; ++dy) {
        for (int dx = -half; dx <= half; ++dx) {
          const int nx = px + dx;
          const int ny = py + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          if (grad.at(nx, ny) < best) {
            best = grad.at(nx, ny);
            bx = nx;
            by = ny;
          }
        }
      }
      if (bx != px || by != py) {
        ctr.x = bx;
        ctr.y = by;
        px = bx;
        py = by;
      }
      const float* lab = img.pixel(px, py);
      ctr.l = lab[0];
      ctr.a = lab[1];
      ctr.b = lab[2];
      centers.push_back(ctr);
    }
  }
  return centers;
}

double slic_distance(const SlicCenter& c, const float* lab, int x, int y, double interval, double compactness) {
  const double dl = c.l - lab[0];
  const double da = c.a - lab[1];
  const double db = c.b - lab[2];
  const double dx = c.x - x;
  const double dy = c.y - y;
  const double d_lab = std::sqrt(dl * dl + da * da + db * db);
  const double d_xy = std::sqrt(dx * dx + dy * dy);
  return d_lab + d_xy / interval * compactness;
}

std::vector<std::int32_t> slic_assign(const imagecore::LabImage& img, const std::vector<SlicCenter>& centers,
                                      double interval, double compactness) {
  const int w = img.width();
  const int h = img.height();
  std::vector<std::int32_t> labels(img.pixel_count(), -1);
  std::vector<double> best(img.pixel_count(), std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const auto& c = centers[k];
    const int x0 = std::max(0, static_cast<int>(std::ceil(c.x - interval)));
    const int x1 = std::min(w - 1, static_cast<int>(std::floor(c.x + interval)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(c.y - interval)));
    const int y1 = std::min(h - 1, static_cast<int>(std::floor(c.y + interval)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double d = slic_distance(c, img.pixel(x, y), x, y, interval, compactness);
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (d < best[i]) {
          best[i] = d;
          labels[i] = static_cast<std::int32_t>(k);
        }
      }
    }
  }
  return labels;
}

PatchSegmentation enforce_connectivity(std::vector<std::int32_t> labels, int width, int height) {
  const auto comp = connected_components(labels, width, height, 4);
  const int n_comp = comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;

  std::vector<int> comp_size(n_comp, 0);
  std::vector<std::int32_t> comp_label(n_comp, -1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++comp_size[comp[i]];
    comp_label[comp[i]] = labels[i];
  }

  // The largest component of each cluster keeps it (first in raster order on ties).
  std::int32_t max_label = -1;
  for (auto l : labels) max_label = std::max(max_label, l);
  std::vector<int> keeper(static_cast<std::size_t>(max_label + 1), -1);
  for (int c = 0; c < n_comp; ++c) {
    const auto l = comp_label[c];
    if (l < 0) continue;
    if (keeper[l] < 0 || comp_size[c] > comp_size[keeper[l]]) keeper[l] = c;
  }

  std::vector<std::int32_t> final_label(n_comp, -1);
  std::vector<long> cluster_size(static_cast<std::size_t>(max_label + 1), 0);
  bool any_kept = false;
  for (int c = 0; c < n_comp; ++c) {
    const auto l = comp_label[c];
    if (l >= 0 && keeper[l] == c) {
      final_label[c] = l;
      cluster_size[l] += comp_size[c];
      any_kept = true;
    }
  }
  assert(any_kept && "no assigned pixel survived clustering");
  if (!any_kept) throw std::logic_error("enforce_connectivity: no assigned pixels");

  // Adjacent component pairs.
  std::vector<std::vector<int>> neighbours(n_comp);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int a = comp[static_cast<std::size_t>(y) * width + x];
      if (x + 1 < width) {
        const int b = comp[static_cast<std::size_t>(y) * width + x + 1];
        if (a != b) {
          neighbours[a].push_back(b);
          neighbours[b].push_back(a);
        }
      }
      if (y + 1 < height) {
        const int b = comp[static_cast<std::size_t>(y + 1) * width + x];
        if (a != b) {
          neighbours[a].push_back(b);
          neighbours[b].push_back(a);
        }
      }
    }
  }

  // Fragments join the largest adjacent cluster; fragments only touching
  // other fragments wait for a later sweep.
  bool pending = true;
  while (pending) {
    pending = false;
    bool progressed = false;
    for (int c = 0; c < n_comp; ++c) {
      if (final_label[c] >= 0) continue;
      std::int32_t target = -1;
      for (int nb : neighbours[c]) {
        const auto l = final_label[nb];
        if (l < 0) continue;
        if (target < 0 || cluster_size[l] > cluster_size[target] ||
            (cluster_size[l] == cluster_size[target] && l < target)) {
          target = l;
        }
      }
      if (target < 0) {
        pending = true;
        continue;
      }
      final_label[c] = target;
      cluster_size[target] += comp_size[c];
      progressed = true;
    }
    if (pending && !progressed) throw std::logic_error("enforce_connectivity: isolated fragment");
  }

  PatchSegmentation seg;
  seg.width = width;
  seg.height = height;
  seg.labels.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) seg.labels[i] = final_label[comp[i]];
  seg.patch_count = relabel_raster_order(seg.labels);
  return seg;
}

SlicResult slic_cluster(const imagecore::LabImage& img, const SlicParams& p) {
  p.validate();
  if (static_cast<std::size_t>(p.k_clusters) > img.pixel_count()) {
    throw std::invalid_argument("slic: k_clusters exceeds pixel count");
  }
  const int w = img.width();
  const int h = img.height();
  const double interval = slic_interval(w, h, p.k_clusters);

  SlicResult result;
  result.centers = slic_initial_centers(img, p);
  std::vector<std::int32_t> labels;
  for (int it = 1; it <= p.max_iterations; ++it) {
    labels = slic_assign(img, result.centers, interval, p.compactness);

    std::vector<SlicCenter> sums(result.centers.size());
    std::vector<long> counts(result.centers.size(), 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const auto l = labels[static_cast<std::size_t>(y) * w + x];
        if (l < 0) continue;
        const float* lab = img.pixel(x, y);
        auto& s = sums[l];
        s.l += lab[0];
        s.a += lab[1];
        s.b += lab[2];
        s.x += x;
        s.y += y;
        ++counts[l];
      }
    }

    double residual = 0.0;
    for (std::size_t k = 0; k < result.centers.size(); ++k) {
      if (counts[k] == 0) continue;
      const double n = static_cast<double>(counts[k]);
      const SlicCenter next{sums[k].l / n, sums[k].a / n, sums[k].b / n, sums[k].x / n, sums[k].y / n};
      const auto& prev = result.centers[k];
      residual += std::sqrt((next.l - prev.l) * (next.l - prev.l) + (next.a - prev.a) * (next.a - prev.a) +
                            (next.b - prev.b) * (next.b - prev.b) + (next.x - prev.x) * (next.x - prev.x) +
                            (next.y - prev.y) * (next.y - prev.y));
      result.centers[k] = next;
    }
    result.iterations = it;
    result.residual = residual;
    if (residual <= p.residual_threshold) break;
  }

  result.segmentation = enforce_connectivity(std::move(labels), w, h);
  return result;
}

}  // namespace fsprior::patchgen
