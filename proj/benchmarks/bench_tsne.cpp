#include <benchmark/benchmark.h>

#include "riser/eval.hpp"
#include "riser/rng.hpp"

using namespace riser;

static void BM_TsneEmbed(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(5);
  Eigen::MatrixXd x(n, 16);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  TsneOptions opts;
  opts.perplexity = 15;
  opts.iterations = 50;
  opts.exaggeration_iters = 20;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tsne_embed(x, opts).points.sum());
  }
}
BENCHMARK(BM_TsneEmbed)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

static void BM_Silhouette(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(5);
  Eigen::MatrixXd x(n, 32);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    labels[i] = i % 4;
    for (int d = 0; d < 32; ++d) x(i, d) = rng.normal() + labels[i];
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(cluster_separation_score(x, labels));
  }
}
BENCHMARK(BM_Silhouette)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
