#pragma once

#include <Eigen/Core>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "riser/config.hpp"
#include "riser/rng.hpp"
#include "riser/sim.hpp"
#include "riser/terrain.hpp"

namespace riser {

/// Proprioceptive observation: angular velocity, body-frame gravity,
/// velocity command (held zero during recovery training), joint angles,
/// joint velocities, previous action.
struct Observation {
  double omega = 0.0;
  Eigen::Vector2d gravity_body = Eigen::Vector2d(0, -1);
  Eigen::Vector2d command = Eigen::Vector2d::Zero();
  std::array<double, 4> q{};
  std::array<double, 4> dq{};
  Eigen::Vector4d prev_action = Eigen::Vector4d::Zero();

  static constexpr int kDim = 17;
  Eigen::VectorXd to_vector() const;
};

/// Ring of the last H+1 observations, flattened newest-first.
class TemporalObservation {
 public:
  TemporalObservation(int history_len, int obs_dim);
  void fill(const Eigen::VectorXd& obs);
  void push(const Eigen::VectorXd& obs);
  const Eigen::VectorXd& flattened() const { return flat_; }
  int frames() const { return frames_; }
  int dim() const { return static_cast<int>(flat_.size()); }

 private:
  int frames_;
  int obs_dim_;
  Eigen::VectorXd flat_;
};

/// Critic-only state: [o_t, true base velocity, active disturbance,
/// height scan], in that order.
struct PrivilegedState {
  Eigen::VectorXd data;
  static int dim(const RunConfig& cfg) {
    return Observation::kDim + 2 + 2 + cfg.terrain.scan_points;
  }
};

struct RewardTerm {
  double raw = 0.0;
  double weighted = 0.0;
};

struct RewardBreakdown {
  RewardTerm uprightness;
  RewardTerm foot_contact;
  RewardTerm joint_accel;
  RewardTerm joint_power;
  RewardTerm action_rate;
  double total = 0.0;
};

Observation observe(const RobotState& state, const Eigen::Vector4d& prev_action,
                    const Eigen::Vector2d& command);

RewardBreakdown compute_reward(const RobotState& state,
                               const Eigen::Vector4d& action,
                               const Eigen::Vector4d& prev_action,
                               const EnvConfig& cfg);

/// All states in the window upright (g_z below threshold), both feet in
/// contact, and |omega| small. The caller guarantees the span covers the
/// configured stability window.
bool is_recovered(std::span<const RobotState> window, const EnvConfig& cfg);

/// Promote above the success threshold, demote below the failure one.
int curriculum_advance(int level, double success_fraction,
                       const EnvConfig& cfg);

struct StepResult {
  Observation obs;
  PrivilegedState priv;
  RewardBreakdown reward;
  Eigen::Vector2d base_velocity = Eigen::Vector2d::Zero();
  bool done = false;
  bool timeout = false;
  bool blown_up = false;
  bool recovered_now = false;
  bool recovered_ever = false;
};

/// One recovery episode driver: terrain + randomized sim + observation
/// stack, stepped at the control rate with PD substeps. One instance per
/// worker; all randomness comes from the seeds handed to reset().
class RecoveryEnv {
 public:
  RecoveryEnv(const RunConfig& cfg, TerrainKind kind, std::uint64_t env_index);

  /// Starts an episode at the given difficulty. Fully determined by
  /// (config, kind, level, seed).
  std::pair<Observation, PrivilegedState> reset(int level, std::uint64_t seed);
  /// Reset drawing the episode seed from the env's own stream, at the
  /// current curriculum level.
  std::pair<Observation, PrivilegedState> reset_auto();

  StepResult step(const Eigen::Vector4d& action);

  /// Records the finished episode's outcome in the trailing success window
  /// and applies the curriculum rule once the window is full.
  void finish_episode(bool recovered);

  const Eigen::VectorXd& temporal() const { return temporal_.flattened(); }
  int temporal_dim() const { return temporal_.dim(); }
  const Heightfield& terrain() const { return terrain_; }
  const PlanarSim& sim() const { return *sim_; }
  PlanarSim& sim() { return *sim_; }
  TerrainKind kind() const { return kind_; }
  int level() const { return level_; }
  void set_level(int level);
  int tick() const { return tick_; }
  std::optional<double> time_to_recover() const;
  double episode_reward() const { return episode_reward_; }
  std::array<std::uint64_t, 4> stream_state() const {
    return env_stream_.state();
  }
  void set_stream_state(const std::array<std::uint64_t, 4>& s) {
    env_stream_.set_state(s);
  }

 private:
  PrivilegedState assemble_privileged(const Observation& obs) const;

  RunConfig cfg_;
  TerrainKind kind_;
  std::uint64_t env_index_;
  Rng env_stream_;   // seeds successive episodes
  Rng episode_rng_;  // all intra-episode randomness
  Heightfield terrain_;
  std::optional<PlanarSim> sim_;
  TemporalObservation temporal_;
  Eigen::Vector4d prev_action_ = Eigen::Vector4d::Zero();
  std::deque<RobotState> window_;
  int window_size_ = 1;
  int level_ = 0;
  int tick_ = 0;
  int episode_steps_ = 0;
  int pd_per_control_ = 4;
  int disturb_interval_ticks_ = 0;
  bool recovered_ever_ = false;
  int first_recovered_tick_ = -1;
  bool blown_up_ = false;
  double episode_reward_ = 0.0;
  double reward_floor_ = 0.0;  // magnitude bound on penalty terms
  std::deque<bool> success_window_;
};

}  // namespace riser
