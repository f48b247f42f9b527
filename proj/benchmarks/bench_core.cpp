#include "irrigrid/clustering.hpp"
#include "irrigrid/evaluation.hpp"
#include "irrigrid/pipeline.hpp"
#include "irrigrid/raster.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace irrigrid;

namespace {

std::vector<double> random_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> pts(n * 12);
  for (std::size_t i = 0; i < n; ++i) {
    int peak = static_cast<int>(i % 3) * 4;
    for (int m = 0; m < 12; ++m) pts[i * 12 + m] = (m == peak ? 0.6 : 0.1) + noise(rng);
  }
  return pts;
}

SynthScene bench_scene(double pixel_size) {
  SynthScene s;
  s.extent = {0.0, 0.0, 0.5, 0.5};
  s.pixel_size = pixel_size;
  s.noise_sigma = 0.05;
  SynthRegion a;
  a.box = {0.0, 0.0, 0.25, 0.5};
  a.irrigated = true;
  a.peak_month = 3;
  SynthRegion b;
  b.box = {0.25, 0.0, 0.5, 0.5};
  b.peak_month = 8;
  s.regions = {a, b};
  return s;
}

} // namespace

static void BM_KMeansFit(benchmark::State& state) {
  auto pts = random_points(static_cast<std::size_t>(state.range(0)), 1);
  PointsView v{pts, 12};
  for (auto _ : state) benchmark::DoNotOptimize(kmeans_fit(v, 3, 7));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KMeansFit)->Arg(1000)->Arg(10000)->Arg(40000);

static void BM_Silhouette(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto pts = random_points(n, 2);
  std::vector<std::uint32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<std::uint32_t>(i % 3);
  PointsView v{pts, 12};
  for (auto _ : state) benchmark::DoNotOptimize(silhouette(v, labels, 3));
}
BENCHMARK(BM_Silhouette)->Arg(1000)->Arg(5000);

static void BM_PredictTile(benchmark::State& state) {
  auto world = synth_generate(bench_scene(0.5 / static_cast<double>(state.range(0))));
  RegionInputs in{world.ndvi, world.mask, {world.precip}, {world.temp}};
  for (auto _ : state) benchmark::DoNotOptimize(predict_region({0.0, 0.0, 0.5, 0.5}, in, PipelineConfig{}, 42, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_PredictTile)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_Irg1RoundTrip(benchmark::State& state) {
  const auto side = static_cast<std::uint32_t>(state.range(0));
  GridMeta m{0.0, 1.0, 0.001, side, side};
  std::vector<float> v(m.pixel_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i % 200) / 200.0f;
  RasterGrid g(m, BandKind::Ndvi, std::move(v));
  for (auto _ : state) benchmark::DoNotOptimize(decode_raster(encode_raster(g)));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(m.pixel_count()) * 4);
}
BENCHMARK(BM_Irg1RoundTrip)->Arg(256)->Arg(2000);
BENCHMARK_MAIN();
