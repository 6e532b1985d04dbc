#include <benchmark/benchmark.h>

#include "riser/config.hpp"
#include "riser/rng.hpp"
#include "riser/sim.hpp"
#include "riser/terrain.hpp"

using namespace riser;

static void BM_PdTick(benchmark::State& state) {
  RunConfig cfg;
  TerrainSpec ts;
  ts.kind = static_cast<TerrainKind>(state.range(0));
  ts.level = 5;
  ts.seed = 3;
  const Heightfield hf = generate_terrain(ts, cfg.terrain);
  Rng rng(7);
  PlanarSim sim(cfg.sim, sample_domain_randomization(rng, cfg.sim));
  sim.set_state(sample_drop_pose(rng, hf, cfg.sim));
  const PdGains g{cfg.sim.kp, cfg.sim.kd};
  for (auto _ : state) {
    const auto tau = pd_torque(cfg.sim.theta_stand, sim.state(), g, sim.dr(),
                               cfg.sim.torque_limit);
    if (!sim.step(tau, hf, 1.0 / 200, cfg.sim.substeps))
      sim.set_state(sample_drop_pose(rng, hf, cfg.sim));
    benchmark::DoNotOptimize(sim.state().z);
  }
}
BENCHMARK(BM_PdTick)->Arg(0)->Arg(1)->Arg(2)->Arg(3)->Arg(4);

static void BM_DropPose(benchmark::State& state) {
  RunConfig cfg;
  TerrainSpec ts;
  ts.kind = TerrainKind::Discrete;
  ts.level = 9;
  ts.seed = 3;
  const Heightfield hf = generate_terrain(ts, cfg.terrain);
  Rng rng(7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_drop_pose(rng, hf, cfg.sim));
  }
}
BENCHMARK(BM_DropPose);
