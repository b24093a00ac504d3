#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "fsprior/common/atomic_file.hpp"
#include "fsprior/common/error.hpp"
#include "fsprior/common/rng.hpp"
#include "fsprior/imagecore/augment.hpp"
#include "fsprior/imagecore/color.hpp"
#include "fsprior/imagecore/png_io.hpp"
#include "fsprior/imagecore/resize.hpp"
#include "fsprior/imagecore/synth.hpp"

namespace fs = std::filesystem;
using namespace fsprior;
using namespace fsprior::imagecore;

namespace {

RgbImage random_image(int w, int h, std::uint64_t seed) {
  Rng r(seed);
  RgbImage img(w, h);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(r.below(256));
  return img;
}

fs::path temp_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("fsprior_imagecore_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Color, MidGrayLab) {
  // Reference value computed independently in double precision (sRGB, D65).
  const auto lab = rgb_to_lab(119, 119, 119);
  EXPECT_NEAR(lab[0], 50.034440993686104, 1e-4);
  EXPECT_NEAR(lab[1], 0.0, 1e-3);
  EXPECT_NEAR(lab[2], 0.0, 1e-3);
}

TEST(Color, BlackAndWhite) {
  const auto black = rgb_to_lab(0, 0, 0);
  EXPECT_NEAR(black[0], 0.0, 1e-4);
  const auto white = rgb_to_lab(255, 255, 255);
  EXPECT_NEAR(white[0], 100.0, 1e-3);
  EXPECT_NEAR(white[1], 0.0, 1e-2);
  EXPECT_NEAR(white[2], 0.0, 1e-2);
}

TEST(Color, RoundTripWithinOneLevel) {
  Rng r(5);
  for (int i = 0; i < 2000; ++i) {
    const std::uint8_t c[3] = {static_cast<std::uint8_t>(r.below(256)), static_cast<std::uint8_t>(r.below(256)),
                               static_cast<std::uint8_t>(r.below(256))};
    const auto lab = rgb_to_lab(c[0], c[1], c[2]);
    const auto back = lab_to_rgb(lab[0], lab[1], lab[2]);
    for (int k = 0; k < 3; ++k) ASSERT_LE(std::abs(int(back[k]) - int(c[k])), 1);
  }
}

TEST(Resize, SameSizeIsIdentity) {
  const auto img = random_image(13, 9, 1);
  EXPECT_EQ(resize_bilinear(img, 13, 9), img);
}

TEST(Resize, ConstantStaysConstant) {
  RgbImage img(10, 7);
  for (auto& v : img.data()) v = 77;
  const auto out = crop_resize(img, Box{2, 1, 5, 4}, 23, 17);
  for (auto v : out.data()) ASSERT_EQ(v, 77);
}

TEST(Resize, FlipIsAnInvolution) {
  const auto img = random_image(11, 6, 2);
  EXPECT_EQ(flip_horizontal(flip_horizontal(img)), img);
  EXPECT_EQ(flip_horizontal(img).at(0, 0, 0), img.at(10, 0, 0));
}

TEST(Resize, NearestMaskKeepsBinaryValues) {
  BinaryMask m(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 4; ++x) m.set(x, y, true);
  const auto small = resize_nearest(m, 2, 2);
  EXPECT_TRUE(small.get(0, 0));
  EXPECT_FALSE(small.get(1, 0));
  EXPECT_EQ(resize_nearest(m, 8, 8), m);
}

TEST(Augment, DeterministicPerSeed) {
  const auto img = random_image(32, 32, 3);
  AugSpec spec;
  spec.seed = 11;
  EXPECT_EQ(two_views(img, spec), two_views(img, spec));
  auto other = spec;
  other.seed = 12;
  EXPECT_NE(two_views(img, spec).first, two_views(img, other).first);
}

TEST(Augment, IdentitySpecKeepsTheImage) {
  const auto img = random_image(32, 24, 4);
  const auto [a, b] = two_views(img, AugSpec::identity(9));
  EXPECT_EQ(a, img);
  EXPECT_EQ(b, img);
}

TEST(Augment, ViewsKeepTheInputSize) {
  const auto img = random_image(40, 30, 5);
  AugSpec spec;
  for (std::uint64_t s = 0; s < 20; ++s) {
    spec.seed = s;
    const auto [a, b] = two_views(img, spec);
    ASSERT_EQ(a.width(), 40);
    ASSERT_EQ(a.height(), 30);
    ASSERT_EQ(b.width(), 40);
  }
}

TEST(Augment, RejectsTinyImagesAndBadSpecs) {
  EXPECT_THROW(two_views(random_image(4, 4, 1), AugSpec{}), std::invalid_argument);
  AugSpec bad;
  bad.crop_scale_min = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = AugSpec{};
  bad.flip_prob = 1.5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Augment, BlurPreservesConstantImages) {
  RgbImage img(16, 16);
  for (auto& v : img.data()) v = 200;
  EXPECT_EQ(gaussian_blur(img, 1.2), img);
  const auto noisy = random_image(16, 16, 8);
  EXPECT_EQ(gaussian_blur(noisy, 0.0), noisy);
}

TEST(Synth, DeterministicAndWellFormed) {
  const auto a = synth_dataset(200, 8, 32, 5);
  const auto b = synth_dataset(200, 8, 32, 5);
  EXPECT_EQ(a, b);
  std::vector<int> per_class(8, 0);
  for (const auto& s : a) {
    ASSERT_EQ(s.image.width(), 32);
    ASSERT_EQ(s.mask.width(), 32);
    ASSERT_GT(s.mask.count(), 0u);
    ASSERT_LT(s.mask.count(), s.mask.size());
    ASSERT_GE(s.class_id, 0);
    ASSERT_LT(s.class_id, 8);
    ++per_class[s.class_id];
  }
  for (int c : per_class) EXPECT_GT(c, 0);
}

TEST(Synth, SampleDependsOnlyOnSeedAndIndex) {
  const auto small = synth_dataset(5, 8, 32, 9);
  const auto large = synth_dataset(12, 8, 32, 9);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(small[i], large[i]);
}

TEST(Synth, ClassesShareColourFamilies) {
  EXPECT_EQ(shape_for_class(0), shape_for_class(8));
  EXPECT_NE(color_family_for_class(0), color_family_for_class(8));
  EXPECT_EQ(color_family_for_class(0), color_family_for_class(4));
  EXPECT_NE(shape_for_class(0), shape_for_class(4));
}

TEST(Png, RgbRoundTrip) {
  const auto img = random_image(17, 5, 6);
  EXPECT_EQ(decode_png_rgb(encode_png(img)), img);
  const auto d = temp_dir("rgb");
  write_png(d / "a.png", img);
  EXPECT_EQ(read_png_rgb(d / "a.png"), img);
}

TEST(Png, GrayRoundTrips) {
  Grid<std::uint8_t> g8(7, 3);
  Grid<std::uint16_t> g16(7, 3);
  for (std::size_t i = 0; i < g8.size(); ++i) {
    g8.values[i] = static_cast<std::uint8_t>(i * 11);
    g16.values[i] = static_cast<std::uint16_t>(i * 3001);
  }
  EXPECT_EQ(decode_png_gray8(encode_png(g8)), g8);
  EXPECT_EQ(decode_png_gray16(encode_png(g16)), g16);
}

TEST(Png, MaskRoundTrip) {
  BinaryMask m(9, 4);
  for (std::size_t i = 0; i < m.size(); i += 3) m.set(i, true);
  const auto d = temp_dir("mask");
  write_png(d / "m.png", m);
  EXPECT_EQ(read_png_mask(d / "m.png"), m);
}

TEST(Png, CorruptInputIsIoErrorNamingTheFile) {
  const auto d = temp_dir("corrupt");
  write_file_atomic(d / "bad.png", std::string_view("definitely not a png"));
  try {
    read_png_rgb(d / "bad.png");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.png"), std::string::npos);
  }
  auto bytes = encode_png(random_image(8, 8, 1));
  bytes.resize(bytes.size() / 2);
  EXPECT_THROW(decode_png_rgb(bytes), IoError);
  EXPECT_THROW(read_png_rgb(d / "missing.png"), IoError);
}
