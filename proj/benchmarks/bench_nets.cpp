#include <benchmark/benchmark.h>

#include "riser/nets.hpp"

using namespace riser;

static void BM_MlpForward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  Rng rng(3);
  Mlp net("bench", 51, {128, 128}, 4);
  net.init(rng);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(51, batch);
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.forward(x).sum());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpForward)->Arg(1)->Arg(256)->Arg(3200);

static void BM_MlpBackward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  Rng rng(3);
  Mlp net("bench", 51, {128, 128}, 4);
  net.init(rng);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(51, batch);
  const Eigen::MatrixXd dy = Eigen::MatrixXd::Random(4, batch);
  for (auto _ : state) {
    Mlp::Cache cache;
    net.forward(x, cache);
    benchmark::DoNotOptimize(net.backward(cache, dy).sum());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpBackward)->Arg(256)->Arg(3200);

static void BM_AdamStep(benchmark::State& state) {
  Rng rng(3);
  Mlp net("bench", 51, {128, 128}, 4);
  net.init(rng);
  Adam adam(net.tensors(), 1e-3, 0.9, 0.999, 1e-8);
  for (Tensor* t : net.tensors()) t->grad.setRandom();
  for (auto _ : state) adam.step();
}
BENCHMARK(BM_AdamStep);
