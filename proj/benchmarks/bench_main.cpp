#include <benchmark/benchmark.h>

#include "fsprior/common/rng.hpp"
#include "fsprior/encoder/encoder.hpp"
#include "fsprior/imagecore/color.hpp"
#include "fsprior/imagecore/synth.hpp"
#include "fsprior/patchgen/felz.hpp"
#include "fsprior/patchgen/slic.hpp"
#include "fsprior/regionmap/region_map.hpp"

using namespace fsprior;

namespace {

imagecore::RgbImage bench_image(int size) { return imagecore::synth_dataset(1, 8, size, 3).front().image; }

encoder::FeatureMap random_map(Rng& rng, int h, int w, int c) {
  encoder::FeatureMap m(h, w, c);
  for (auto& v : m.values) v = static_cast<float>(rng.uniform(0.0, 1.0));
  return m;
}

}  // namespace

static void BM_Slic(benchmark::State& state) {
  const auto lab = imagecore::rgb_to_lab(bench_image(static_cast<int>(state.range(0))));
  patchgen::SlicParams p;
  p.k_clusters = static_cast<int>(state.range(0) * state.range(0) / 128);
  for (auto _ : state) benchmark::DoNotOptimize(patchgen::slic_segment(lab, p));
}
BENCHMARK(BM_Slic)->Arg(32)->Arg(64)->Arg(128);

static void BM_Felzenszwalb(benchmark::State& state) {
  const auto img = bench_image(static_cast<int>(state.range(0)));
  const patchgen::FelzParams p;
  for (auto _ : state) benchmark::DoNotOptimize(patchgen::felz_segment(img, p));
}
BENCHMARK(BM_Felzenszwalb)->Arg(32)->Arg(64)->Arg(128);

static void BM_EncoderForward(benchmark::State& state) {
  const auto img = bench_image(static_cast<int>(state.range(0)));
  const auto params = encoder::init_encoder(encoder::EncoderArchitecture::standard(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(encoder::encoder_forward(params, img));
}
BENCHMARK(BM_EncoderForward)->Arg(32)->Arg(64);

static void BM_PriorRegionMap(benchmark::State& state) {
  Rng rng(5);
  const int s = static_cast<int>(state.range(0));
  const auto xq = random_map(rng, s, s, 64);
  const auto pq = random_map(rng, s, s, 64);
  for (auto _ : state) benchmark::DoNotOptimize(regionmap::prior_region_map(xq, pq));
}
BENCHMARK(BM_PriorRegionMap)->Arg(8)->Arg(16)->Arg(32);
BENCHMARK_MAIN();
