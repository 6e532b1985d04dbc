#include <benchmark/benchmark.h>

#include "riser/config.hpp"
#include "riser/terrain.hpp"

using namespace riser;

static void BM_Generate(benchmark::State& state) {
  const TerrainConfig cfg;
  TerrainSpec spec;
  spec.kind = static_cast<TerrainKind>(state.range(0));
  spec.level = 7;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    spec.seed = ++seed;
    benchmark::DoNotOptimize(generate_terrain(spec, cfg).max_height());
  }
}
BENCHMARK(BM_Generate)->Arg(0)->Arg(1)->Arg(2)->Arg(3)->Arg(4);

static void BM_HeightScan(benchmark::State& state) {
  const TerrainConfig cfg;
  TerrainSpec spec;
  spec.kind = TerrainKind::Rough;
  spec.level = 7;
  spec.seed = 11;
  const Heightfield hf = generate_terrain(spec, cfg);
  double x = 2.0;
  for (auto _ : state) {
    x += 0.01;
    if (x > 6) x = 2;
    benchmark::DoNotOptimize(heightmap_scan(hf, x, 0.4, 11, 0.1).sum());
  }
}
BENCHMARK(BM_HeightScan);
