#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <set>

#include "fsprior/common/atomic_file.hpp"
#include "fsprior/common/container.hpp"
#include "fsprior/common/error.hpp"
#include "fsprior/common/rng.hpp"

namespace fs = std::filesystem;
using namespace fsprior;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("fsprior_common_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Rng, SameSeedSameSequence) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Rng, UniformAndBelowStayInRange) {
  Rng r(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(r.below(std::uint64_t{7}), 7u);
  }
}

TEST(Rng, NormalHasRoughlyUnitMoments) {
  Rng r(3);
  double s = 0, s2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.05);
  EXPECT_NEAR(s2 / n, 1.0, 0.05);
}

TEST(DeriveSeed, StreamsDiffer) {
  std::set<std::uint64_t> seen;
  for (int a = 0; a < 10; ++a)
    for (int b = 0; b < 10; ++b) seen.insert(derive_seed(7, a, b));
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_EQ(derive_seed(7, 1, 2), derive_seed(7, 1, 2));
  EXPECT_NE(derive_seed(7, 1, 2), derive_seed(7, 2, 1));
}

TEST(Container, RoundTripsBitExactly) {
  const std::vector<float> v = {0.0f, -0.0f, 1.5f, 3.1415927f, 1e-38f, -7.25e12f};
  const auto bytes = encode_container(R"({"kind":"x"})", v);
  EXPECT_EQ(bytes[0], 'Q');
  EXPECT_EQ(bytes[3], '1');
  const Container c = decode_container(bytes);
  EXPECT_EQ(c.header_json, R"({"kind":"x"})");
  ASSERT_EQ(c.values.size(), v.size());
  EXPECT_EQ(std::memcmp(c.values.data(), v.data(), v.size() * sizeof(float)), 0);
}

TEST(Container, RejectsCorruptInput) {
  auto bytes = encode_container("{}", std::vector<float>{1, 2, 3});
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_container(bad_magic), IoError);
  auto truncated = bytes;
  truncated.resize(truncated.size() - 2);
  EXPECT_THROW(decode_container(truncated), IoError);
  EXPECT_THROW(decode_container(std::vector<std::uint8_t>{'Q', 'G'}), IoError);
}

TEST(AtomicFile, WritesAndLeavesNoTemporaries) {
  const auto d = temp_dir("atomic");
  write_file_atomic(d / "a.txt", std::string_view("hello"));
  write_file_atomic(d / "a.txt", std::string_view("world"));
  const auto bytes = read_file_bytes(d / "a.txt");
  EXPECT_EQ(std::string(bytes.begin(), bytes.end()), "world");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(d)) ++files;
  EXPECT_EQ(files, 1);
}

TEST(AtomicFile, MissingFileIsIoError) { EXPECT_THROW(read_file_bytes("/nonexistent/fsprior/x"), IoError); }
