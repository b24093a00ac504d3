#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "fsprior/common/rng.hpp"
#include "fsprior/imagecore/color.hpp"
#include "fsprior/imagecore/synth.hpp"
#include "fsprior/patchgen/felz.hpp"
#include "fsprior/patchgen/gradient.hpp"
#include "fsprior/patchgen/patches.hpp"
#include "fsprior/patchgen/segmentation.hpp"
#include "fsprior/patchgen/slic.hpp"

namespace fs = std::filesystem;
using namespace fsprior;
using namespace fsprior::patchgen;
using imagecore::RgbImage;

namespace {

RgbImage constant_image(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = r;
      img.at(x, y, 1) = g;
      img.at(x, y, 2) = b;
    }
  return img;
}

RgbImage random_image(int w, int h, std::uint64_t seed) {
  Rng r(seed);
  RgbImage img(w, h);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(r.below(256));
  return img;
}

/// Two colours split by a random vertical or horizontal line.
RgbImage two_tone(std::uint64_t seed) {
  Rng r(seed);
  const int w = 16 + r.below(33), h = 16 + r.below(33);
  const bool vertical = r.bernoulli(0.5);
  const int cut = 4 + r.below((vertical ? w : h) - 8);
  std::uint8_t a[3], b[3];
  for (int k = 0; k < 3; ++k) {
    a[k] = static_cast<std::uint8_t>(r.below(256));
    b[k] = static_cast<std::uint8_t>(r.below(256));
  }
  // Keep the colours clearly apart so the cut edge exceeds k/|C| for both sides.
  if (std::abs(int(a[0]) - int(b[0])) < 120) b[0] = static_cast<std::uint8_t>(a[0] < 128 ? a[0] + 120 : a[0] - 120);
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const bool first = vertical ? x < cut : y < cut;
      for (int k = 0; k < 3; ++k) img.at(x, y, k) = first ? a[k] : b[k];
    }
  return img;
}

}  // namespace

TEST(Segmentation, RelabelAndComponents) {
  std::vector<std::int32_t> labels = {5, 5, 2, 2, 5, 7};
  EXPECT_EQ(relabel_raster_order(labels), 3);
  EXPECT_EQ(labels, (std::vector<std::int32_t>{0, 0, 1, 1, 0, 2}));
  // 3 x 2 grid: label 0 at (0,0),(1,0),(1,1) connected; diagonal-only touch splits.
  const std::vector<std::int32_t> grid = {0, 1, 0, 1, 0, 1};
  const auto cc4 = connected_components(grid, 3, 2, 4);
  EXPECT_EQ(std::set<std::int32_t>(cc4.begin(), cc4.end()).size(), 6u);
  const auto cc8 = connected_components(grid, 3, 2, 8);
  EXPECT_EQ(std::set<std::int32_t>(cc8.begin(), cc8.end()).size(), 2u);
}

TEST(Segmentation, ValidPartitionChecks) {
  PatchSegmentation seg{2, 2, {0, 0, 1, 1}, 2};
  EXPECT_TRUE(is_valid_partition(seg));
  PatchSegmentation disconnected{2, 2, {0, 1, 1, 0}, 2};
  EXPECT_FALSE(is_valid_partition(disconnected));
  PatchSegmentation unused{2, 2, {0, 0, 0, 0}, 2};
  EXPECT_FALSE(is_valid_partition(unused));
}

TEST(Segmentation, SaveLoadRoundTrip) {
  const fs::path d = fs::temp_directory_path() / "fsprior_patchgen_io";
  fs::remove_all(d);
  fs::create_directories(d);
  const auto seg = felz_segment(random_image(20, 12, 3), FelzParams{});
  save_segmentation(d / "s.png", d / "s.json", seg, R"({"method":"felz"})");
  EXPECT_EQ(load_segmentation(d / "s.png"), seg);
  EXPECT_TRUE(fs::exists(d / "s.json"));
}

TEST(Gradient, BorderIsInfiniteAndInteriorMatchesDefinition) {
  const auto lab = imagecore::rgb_to_lab(random_image(6, 5, 4));
  const auto g = gradient_map(lab);
  EXPECT_TRUE(std::isinf(g.at(0, 2)));
  EXPECT_TRUE(std::isinf(g.at(3, 4)));
  double expect = 0;
  for (int c = 0; c < 3; ++c) {
    const double dx = lab.at(3, 2, c) - lab.at(1, 2, c);
    const double dy = lab.at(2, 3, c) - lab.at(2, 1, c);
    expect += dx * dx + dy * dy;
  }
  EXPECT_NEAR(g.at(2, 2), expect, 1e-3 * (1 + expect));
}

TEST(Slic, IntervalAndGrid) {
  EXPECT_DOUBLE_EQ(slic_interval(64, 64, 16), 16.0);
  EXPECT_EQ(slic_grid(64, 64, 16), std::make_pair(4, 4));
  EXPECT_EQ(slic_grid(32, 32, 2), std::make_pair(2, 1));
  for (int k = 1; k <= 40; ++k) {
    const auto [c, r] = slic_grid(37, 23, k);
    EXPECT_LE(c * r, k);
    EXPECT_GE(c, 1);
    EXPECT_GE(r, 1);
  }
}

TEST(Slic, DistanceCombinesColourAndSpace) {
  SlicCenter c{50, 0, 0, 0, 0};
  const float lab[3] = {53, 4, 0};
  // D_lab = 5, D_xy = 5 at (3,4); S = 10, m = 10 -> 5 + 5 = 10.
  EXPECT_DOUBLE_EQ(slic_distance(c, lab, 3, 4, 10.0, 10.0), 10.0);
}

TEST(Slic, ConstantImageGivesRegularGrid) {
  const auto lab = imagecore::rgb_to_lab(constant_image(64, 64, 90, 140, 30));
  SlicParams p;
  p.k_clusters = 16;
  const auto r = slic_cluster(lab, p);
  EXPECT_LE(r.iterations, 10);
  ASSERT_EQ(r.segmentation.patch_count, 16);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) ASSERT_EQ(r.segmentation.at(x, y), (y / 16) * 4 + x / 16);
}

TEST(Slic, OutputsAreValidPartitions) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto img = random_image(24 + static_cast<int>(s), 20, s);
    SlicParams p;
    p.k_clusters = 1 + static_cast<int>(s % 9);
    const auto seg = slic_segment(imagecore::rgb_to_lab(img), p);
    ASSERT_TRUE(is_valid_partition(seg)) << "seed " << s;
    ASSERT_EQ(seg.width, img.width());
  }
  const auto data = imagecore::synth_dataset(10, 8, 32, 1);
  for (const auto& li : data) ASSERT_TRUE(is_valid_partition(slic_segment(imagecore::rgb_to_lab(li.image), {})));
}

TEST(Slic, Deterministic) {
  const auto lab = imagecore::rgb_to_lab(random_image(40, 30, 9));
  EXPECT_EQ(slic_cluster(lab, {}).segmentation, slic_cluster(lab, {}).segmentation);
}

TEST(Slic, RejectsBadParams) {
  SlicParams p;
  p.k_clusters = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = SlicParams{};
  p.recenter_window = 2;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Felz, ConstantImageIsOnePatch) {
  for (int conn : {4, 8}) {
    FelzParams p;
    p.connectivity = conn;
    const auto seg = felz_segment(constant_image(23, 17, 10, 200, 30), p);
    EXPECT_EQ(seg.patch_count, 1);
    EXPECT_TRUE(is_valid_partition(seg));
  }
}

TEST(Felz, TwoToneImagesGiveTwoPatches) {
  FelzParams p;
  p.scale = 200;
  p.min_component_size = 5;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto img = two_tone(s);
    const auto seg = felz_segment(img, p);
    ASSERT_EQ(seg.patch_count, 2) << "seed " << s;
    ASSERT_TRUE(is_valid_partition(seg));
  }
}

TEST(Felz, EdgesAreSortedWithDeterministicTies) {
  const auto edges = build_sorted_edges(random_image(9, 7, 2), FelzParams{});
  EXPECT_EQ(edges.size(), static_cast<std::size_t>(8 * 7 + 9 * 6));
  for (std::size_t i = 1; i < edges.size(); ++i) {
    const auto& a = edges[i - 1];
    const auto& b = edges[i];
    ASSERT_TRUE(a.weight < b.weight || (a.weight == b.weight && (a.a < b.a || (a.a == b.a && a.b < b.b))));
  }
}

TEST(Felz, OutputsAreValidPartitions) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    FelzParams p;
    p.connectivity = s % 2 ? 8 : 4;
    p.scale = 50.0 + 40.0 * static_cast<double>(s % 5);
    p.min_component_size = 1 + static_cast<int>(s % 7);
    ASSERT_TRUE(is_valid_partition(felz_segment(random_image(21, 19, s), p))) << "seed " << s;
  }
}

TEST(Felz, MinSizeIsRespectedOnSmoothImages) {
  const auto data = imagecore::synth_dataset(10, 8, 32, 2);
  FelzParams p;
  p.min_component_size = 20;
  for (const auto& li : data) {
    const auto seg = felz_segment(li.image, p);
    for (int a : seg.patch_areas()) EXPECT_GE(a, 20);
  }
}

TEST(Felz, LargerScaleNeverGivesMorePatchesOnSynthData) {
  const auto data = imagecore::synth_dataset(20, 8, 32, 3);
  for (const auto& li : data) {
    int prev = 1 << 30;
    for (double k : {25.0, 100.0, 400.0, 1600.0}) {
      FelzParams p;
      p.scale = k;
      const int n = felz_segment(li.image, p).patch_count;
      EXPECT_LE(n, prev) << "k=" << k;
      prev = n;
    }
  }
}

TEST(Patches, TightCropsAboveMinArea) {
  PatchSegmentation seg{8, 4, std::vector<std::int32_t>(32, 0), 2};
  for (int y = 1; y < 3; ++y)
    for (int x = 5; x < 8; ++x) seg.labels[static_cast<std::size_t>(y) * 8 + x] = 1;
  ASSERT_TRUE(is_valid_partition(seg));
  const auto img = random_image(8, 4, 1);
  auto crops = extract_patches(img, seg, 1, 10);
  ASSERT_EQ(crops.size(), 2u);
  EXPECT_EQ(crops[1].box, (imagecore::Box{5, 1, 3, 2}));
  EXPECT_EQ(crops[1].area, 6);
  EXPECT_EQ(crops[1].pixels.width(), 10);
  EXPECT_EQ(crops[0].area, 26);
  crops = extract_patches(img, seg, 7, 10);
  ASSERT_EQ(crops.size(), 1u);
  EXPECT_EQ(crops[0].patch_id, 0);
}
