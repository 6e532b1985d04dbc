#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "riser/config.hpp"

using namespace riser;

TEST_CASE("empty file yields the full default config") {
  const RunConfig cfg = parse_config_text("");
  const RunConfig fresh;
  CHECK(serialize_config(cfg) == serialize_config(fresh));
}

TEST_CASE("defaults carry the published constants") {
  const RunConfig cfg = parse_config_text("");
  // Reward weights.
  CHECK(cfg.env.w_upright == 1.0);
  CHECK(cfg.env.w_contact == 1.0);
  CHECK(cfg.env.w_joint_accel == -1e-6);
  CHECK(cfg.env.w_joint_power == -1e-5);
  CHECK(cfg.env.w_action_rate == -0.05);
  // Randomization ranges.
  CHECK(cfg.sim.payload_min == -1.0);
  CHECK(cfg.sim.payload_max == 2.0);
  CHECK(cfg.sim.kp_factor_min == 0.9);
  CHECK(cfg.sim.kp_factor_max == 1.1);
  CHECK(cfg.sim.kd_factor_min == 0.9);
  CHECK(cfg.sim.kd_factor_max == 1.1);
  CHECK(cfg.sim.motor_strength_min == 0.9);
  CHECK(cfg.sim.motor_strength_max == 1.1);
  CHECK(cfg.sim.com_shift_mm == 50.0);
  // Optimization constants.
  CHECK(cfg.ppo.clip == 0.2);
  CHECK(cfg.ppo.gae_lambda == 0.95);
  CHECK(cfg.ppo.gamma == 0.99);
  CHECK(cfg.ppo.lr == 1e-3);
  // Control rates and gains.
  CHECK(cfg.sim.kp == 28.0);
  CHECK(cfg.sim.kd == 0.7);
  CHECK(cfg.env.control_hz == 50.0);
  CHECK(cfg.sim.pd_hz == 200.0);
  CHECK(cfg.pd_per_control() == 4);
}

TEST_CASE("overrides apply last") {
  const RunConfig cfg =
      parse_config_text("[ppo]\ngamma = 0.5\n", {"ppo.gamma=0.99"});
  CHECK(cfg.ppo.gamma == 0.99);
}

TEST_CASE("range violations name the exact key") {
  CHECK_THROWS_WITH_AS(parse_config_text("[ppo]\ngamma = 1.5\n"),
                       doctest::Contains("ppo.gamma"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_text("[ppo]\nclip = 0.0\n"),
                       doctest::Contains("ppo.clip"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_text("[terrain]\nscan_points = 10\n"),
                       doctest::Contains("terrain.scan_points"),
                       std::runtime_error);
}

TEST_CASE("unknown keys and type mismatches are rejected by name") {
  CHECK_THROWS_WITH_AS(parse_config_text("[ppo]\nlearning = 1\n"),
                       doctest::Contains("ppo.learning"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_text("[nope]\nx = 1\n"),
                       doctest::Contains("nope.x"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_text("[ppo]\ngamma = true\n"),
                       doctest::Contains("ppo.gamma"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_text("[env]\nterrain_kinds = [1, 2]\n"),
                       doctest::Contains("env.terrain_kinds"),
                       std::runtime_error);
}

TEST_CASE("serialization round-trips exactly, including awkward doubles") {
  RunConfig cfg;
  cfg.ppo.lr = 1.0 / 3.0;
  cfg.seed = 0xdeadbeefcafef00dULL;
  cfg.env.terrain_kinds = {"rough", "stairs"};
  cfg.nets.actor_hidden = {64, 32};
  const RunConfig back = parse_config_text(serialize_config(cfg));
  CHECK(serialize_config(back) == serialize_config(cfg));
  CHECK(back.ppo.lr == cfg.ppo.lr);
  CHECK(back.seed == cfg.seed);
  CHECK(back.env.terrain_kinds == cfg.env.terrain_kinds);
}

TEST_CASE("annotated serialization parses back (comments stripped)") {
  RunConfig cfg;
  cfg.ppo.n_envs = 16;
  const RunConfig back = parse_config_text(serialize_config_annotated(cfg));
  CHECK(config_hash(back) == config_hash(cfg));
}

TEST_CASE("config hash is stable and sensitive") {
  RunConfig a, b;
  CHECK(config_hash(a) == config_hash(b));
  b.ppo.gamma = 0.98;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("derived step counts") {
  RunConfig cfg;
  CHECK(cfg.episode_steps() == 250);
  cfg.env.control_hz = 40.0;  // 200/40 = 5
  CHECK(cfg.pd_per_control() == 5);
  cfg.env.control_hz = 60.0;  // not integral
  CHECK_THROWS(validate_config(cfg));
}
