#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace riser {

struct TerrainConfig {
  double cell_size = 0.02;        // m between elevation samples
  double extent = 8.0;            // field length, m
  int scan_points = 11;           // height scan entries (odd, centered)
  double scan_spacing = 0.1;      // m between scan points
  double block_width_min = 0.2;   // discrete-block edge range, m
  double block_width_max = 0.8;
  double blocks_per_meter = 2.0;
  double rough_correlation = 0.1;  // value-noise knot spacing, m
  double slope_min_deg = 10.0;     // grade range across levels
  double slope_max_deg = 30.0;
  double stair_tread = 0.30;       // fixed tread width, m
};

struct SimConfig {
  double gravity = 9.81;
  double pd_hz = 200.0;   // PD/torque update rate
  int substeps = 8;       // integrator micro-steps per PD tick
  double contact_stiffness = 2.0e4;   // N/m, normal penalty spring
  double contact_damping = 2.0e2;     // N s/m
  double friction_stiffness = 1.0e5;  // N/m, tangential stick spring
  double friction_damping = 1.0e2;    // N s/m
  double friction_mu = 0.8;
  double joint_limit_stiffness = 1.0e3;  // N m/rad beyond the limit
  double joint_limit_damping = 5.0;
  double torque_limit = 33.5;  // N m
  double kp = 28.0;
  double kd = 0.7;

  // Frontal-plane robot: rectangular trunk, two 2-link legs.
  double body_mass = 7.5;
  double body_inertia = 0.0537;  // kg m^2 about the trunk CoM
  double body_half_width = 0.135;
  double body_half_height = 0.057;
  double upper_mass = 2.0;
  double upper_length = 0.21;
  double lower_mass = 0.35;
  double lower_length = 0.21;
  double foot_radius = 0.02;
  double hip_limit = 2.8;   // |hip angle| bound, rad
  double knee_limit = 2.6;  // |knee angle| bound, rad
  std::array<double, 4> theta_stand = {-0.1, 0.2, 0.1, -0.2};
  double vel_guard = 500.0;  // blow-up threshold on any velocity coordinate

  // Per-episode randomization ranges.
  double payload_min = -1.0;  // kg
  double payload_max = 2.0;
  double kp_factor_min = 0.9;
  double kp_factor_max = 1.1;
  double kd_factor_min = 0.9;
  double kd_factor_max = 1.1;
  double motor_strength_min = 0.9;
  double motor_strength_max = 1.1;
  double com_shift_mm = 50.0;  // CoM shift drawn from +-this, mm

  // Random pushes during training episodes.
  double disturb_interval = 3.0;  // s between scheduling points
  double disturb_prob = 0.5;
  double disturb_force = 30.0;    // N, per-axis uniform bound
  double disturb_duration = 0.2;  // s

  double drop_height_min = 0.3;  // spawn clearance above terrain, m
  double drop_height_max = 0.6;
  double drop_roll_min = -3.14159265358979323846;
  double drop_roll_max = 3.14159265358979323846;
};

struct EnvConfig {
  double control_hz = 50.0;
  double episode_seconds = 5.0;
  int history_len = 5;  // temporal observation stacks H+1 frames
  double action_scale = 0.5;
  double action_clip = 2.0;
  double recover_gz = -0.96;    // body-frame gravity z must stay below this
  double recover_omega = 0.5;   // rad/s
  double recover_window = 0.5;  // s the conditions must hold
  std::vector<std::string> terrain_kinds = {"discrete"};
  int max_level = 9;

  // Reward weights.
  double w_upright = 1.0;
  double w_contact = 1.0;
  double w_joint_accel = -1.0e-6;
  double w_joint_power = -1.0e-5;
  double w_action_rate = -0.05;

  int curriculum_window = 20;  // trailing episodes per promotion decision
  double promote_threshold = 0.8;
  double demote_threshold = 0.3;
};

struct NetsConfig {
  std::vector<int> actor_hidden = {128, 128};
  std::vector<int> critic_hidden = {128, 128};
  std::vector<int> cenet_hidden = {128, 128};
  std::vector<int> decoder_hidden = {128, 128};
  int latent_dim = 32;
  double beta = 1.0;  // KL weight in the estimator loss
  double logstd_init = -0.22314355131420976;  // ln 0.8
  double grad_clip = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1.0e-8;
};

struct PpoConfig {
  double clip = 0.2;
  double gae_lambda = 0.95;
  double gamma = 0.99;
  double lr = 1.0e-3;
  int n_envs = 256;  // desk-scale default; reference setup uses 4096
  int rollout_steps = 50;
  int epochs = 4;
  int minibatches = 4;
  double entropy_coef = 0.005;
  double value_coef = 1.0;
  double target_kl = 0.1;  // stop policy updates for the iteration past this
  bool baseline_mode = false;
  bool normalize_advantages = true;
  int iterations = 1000;
  int checkpoint_every = 100;
};

struct EvalConfig {
  int n_robots = 1000;
  int n_seeds = 10;
  double tsne_perplexity = 30.0;
  int tsne_iterations = 1000;
  double tsne_exaggeration = 12.0;
  int tsne_exaggeration_iters = 250;
  double tsne_learning_rate = 200.0;
  std::vector<std::string> latent_kinds = {"flat", "rough", "discrete",
                                           "slope", "stairs"};
  int latent_level = 3;
  int latent_episodes = 4;  // per scenario
};

struct RunConfig {
  int schema_version = 1;
  std::uint64_t seed = 0;
  TerrainConfig terrain;
  SimConfig sim;
  EnvConfig env;
  NetsConfig nets;
  PpoConfig ppo;
  EvalConfig eval;

  /// PD ticks per control step (pd_hz / control_hz, validated integral).
  int pd_per_control() const;
  /// Control steps in one episode.
  int episode_steps() const;
};

/// Parses a config file, applies key=value overrides, validates.
/// Unknown keys, type mismatches and range violations throw
/// std::runtime_error naming the offending key.
RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides = {});
/// Same but from in-memory text.
RunConfig parse_config_text(const std::string& text,
                            const std::vector<std::string>& overrides = {});

void validate_config(const RunConfig& cfg);

/// Canonical key = value listing (no comments); input to config_hash.
std::string serialize_config(const RunConfig& cfg);
/// Listing with explanatory comments, for config.snapshot files.
std::string serialize_config_annotated(const RunConfig& cfg);
/// FNV-1a over the canonical serialization.
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace riser
