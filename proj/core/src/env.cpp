#include "riser/env.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace riser {

Eigen::VectorXd Observation::to_vector() const {
  Eigen::VectorXd v(kDim);
  v(0) = omega;
  v.segment<2>(1) = gravity_body;
  v.segment<2>(3) = command;
  for (int j = 0; j < 4; ++j) {
    v(5 + j) = q[j];
    v(9 + j) = dq[j];
  }
  v.segment<4>(13) = prev_action;
  return v;
}

TemporalObservation::TemporalObservation(int history_len, int obs_dim)
    : frames_(history_len + 1),
      obs_dim_(obs_dim),
      flat_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(frames_) * obs_dim)) {}

void TemporalObservation::fill(const Eigen::VectorXd& obs) {
  for (int f = 0; f < frames_; ++f) flat_.segment(f * obs_dim_, obs_dim_) = obs;
}

void TemporalObservation::push(const Eigen::VectorXd& obs) {
  // Shift old frames toward the tail (oldest-last), then write the head.
  for (int f = frames_ - 1; f >= 1; --f)
    flat_.segment(f * obs_dim_, obs_dim_) =
        flat_.segment((f - 1) * obs_dim_, obs_dim_).eval();
  flat_.head(obs_dim_) = obs;
}

Observation observe(const RobotState& state, const Eigen::Vector4d& prev_action,
                    const Eigen::Vector2d& command) {
  Observation o;
  o.omega = state.omega;
  // World gravity direction rotated into the body frame.
  o.gravity_body = Eigen::Vector2d(-std::sin(state.roll), -std::cos(state.roll));
  o.command = command;
  o.q = state.q;
  o.dq = state.dq;
  o.prev_action = prev_action;
  return o;
}

RewardBreakdown compute_reward(const RobotState& state,
                               const Eigen::Vector4d& action,
                               const Eigen::Vector4d& prev_action,
                               const EnvConfig& cfg) {
  RewardBreakdown r;
  const double g_z = -std::cos(state.roll);
  r.uprightness.raw = 1.0 - g_z;
  const double contacts = (state.foot_contact[0] ? 1.0 : 0.0) +
                          (state.foot_contact[1] ? 1.0 : 0.0);
  r.foot_contact.raw = contacts / 2.0;
  double accel = 0.0, power = 0.0;
  for (int j = 0; j < 4; ++j) {
    accel += state.ddq[j] * state.ddq[j];
    power += std::abs(state.tau[j]) * std::abs(state.dq[j]);
  }
  r.joint_accel.raw = accel;
  r.joint_power.raw = power;
  r.action_rate.raw = (action - prev_action).squaredNorm();

  r.uprightness.weighted = cfg.w_upright * r.uprightness.raw;
  r.foot_contact.weighted = cfg.w_contact * r.foot_contact.raw;
  r.joint_accel.weighted = cfg.w_joint_accel * r.joint_accel.raw;
  r.joint_power.weighted = cfg.w_joint_power * r.joint_power.raw;
  r.action_rate.weighted = cfg.w_action_rate * r.action_rate.raw;
  r.total = r.uprightness.weighted + r.foot_contact.weighted +
            r.joint_accel.weighted + r.joint_power.weighted +
            r.action_rate.weighted;
  return r;
}

bool is_recovered(std::span<const RobotState> window, const EnvConfig& cfg) {
  if (window.empty()) return false;
  for (const RobotState& s : window) {
    const double g_z = -std::cos(s.roll);
    if (g_z >= cfg.recover_gz) return false;
    if (!s.foot_contact[0] || !s.foot_contact[1]) return false;
    if (std::abs(s.omega) >= cfg.recover_omega) return false;
  }
  return true;
}

int curriculum_advance(int level, double success_fraction,
                       const EnvConfig& cfg) {
  if (success_fraction > cfg.promote_threshold) return std::min(level + 1, 9);
  if (success_fraction < cfg.demote_threshold) return std::max(level - 1, 0);
  return level;
}

RecoveryEnv::RecoveryEnv(const RunConfig& cfg, TerrainKind kind,
                         std::uint64_t env_index)
    : cfg_(cfg),
      kind_(kind),
      env_index_(env_index),
      env_stream_(mix_seed({cfg.seed, 0x656e76, env_index})),
      temporal_(cfg.env.history_len, Observation::kDim) {
  episode_steps_ = cfg_.episode_steps();
  pd_per_control_ = cfg_.pd_per_control();
  window_size_ = static_cast<int>(
                     std::lround(cfg_.env.recover_window * cfg_.env.control_hz)) +
                 1;
  disturb_interval_ticks_ = static_cast<int>(
      std::lround(cfg_.sim.disturb_interval * cfg_.env.control_hz));

  // Penalty-term magnitude bound from the configured guards; the per-step
  // reward assert uses it.
  const double dt_pd = 1.0 / cfg_.sim.pd_hz;
  const double ddq_max = 2.0 * cfg_.sim.vel_guard / dt_pd;
  const double tau_max = cfg_.sim.motor_strength_max * cfg_.sim.torque_limit;
  reward_floor_ = std::abs(cfg_.env.w_joint_accel) * 4 * ddq_max * ddq_max +
                  std::abs(cfg_.env.w_joint_power) * 4 * tau_max *
                      cfg_.sim.vel_guard +
                  std::abs(cfg_.env.w_action_rate) * 4 *
                      (2 * cfg_.env.action_clip) * (2 * cfg_.env.action_clip);
}

void RecoveryEnv::set_level(int level) {
  level_ = std::clamp(level, 0, cfg_.env.max_level);
}

std::pair<Observation, PrivilegedState> RecoveryEnv::reset(
    int level, std::uint64_t seed) {
  if (level < 0 || level > 9)
    throw std::invalid_argument("reset level must be in [0,9]");
  level_ = std::min(level, cfg_.env.max_level);

  episode_rng_ = Rng(mix_seed({cfg_.seed, 0x657069, seed,
                               static_cast<std::uint64_t>(kind_),
                               static_cast<std::uint64_t>(level_)}));
  TerrainSpec spec;
  spec.kind = kind_;
  spec.level = level_;
  spec.seed = mix_seed({seed, 0x74657272});
  spec.extent = cfg_.terrain.extent;
  spec.cell_size = cfg_.terrain.cell_size;
  terrain_ = generate_terrain(spec, cfg_.terrain);

  const DomainRandomization dr =
      sample_domain_randomization(episode_rng_, cfg_.sim);
  sim_.emplace(cfg_.sim, dr);
  sim_->set_state(sample_drop_pose(episode_rng_, terrain_, cfg_.sim));

  prev_action_.setZero();
  window_.clear();
  tick_ = 0;
  recovered_ever_ = false;
  first_recovered_tick_ = -1;
  blown_up_ = false;
  episode_reward_ = 0.0;

  const Observation obs =
      observe(sim_->state(), prev_action_, Eigen::Vector2d::Zero());
  temporal_.fill(obs.to_vector());
  return {obs, assemble_privileged(obs)};
}

std::pair<Observation, PrivilegedState> RecoveryEnv::reset_auto() {
  return reset(level_, env_stream_.next_u64());
}

PrivilegedState RecoveryEnv::assemble_privileged(const Observation& obs) const {
  PrivilegedState ps;
  const int n_scan = cfg_.terrain.scan_points;
  ps.data.resize(Observation::kDim + 2 + 2 + n_scan);
  ps.data.head(Observation::kDim) = obs.to_vector();
  const RobotState& s = sim_->state();
  ps.data.segment<2>(Observation::kDim) = Eigen::Vector2d(s.vx, s.vz);
  ps.data.segment<2>(Observation::kDim + 2) = sim_->active_disturbance();
  ps.data.tail(n_scan) = heightmap_scan(terrain_, s.x, s.z, n_scan,
                                        cfg_.terrain.scan_spacing);
  return ps;
}

StepResult RecoveryEnv::step(const Eigen::Vector4d& action) {
  if (!sim_) throw std::logic_error("step() before reset()");

  Eigen::Vector4d a = action.cwiseMax(-cfg_.env.action_clip)
                          .cwiseMin(cfg_.env.action_clip);

  // Random push schedule: every disturb_interval, with probability p,
  // a uniform force held for disturb_duration.
  if (disturb_interval_ticks_ > 0 && tick_ > 0 &&
      tick_ % disturb_interval_ticks_ == 0) {
    const bool fire = episode_rng_.bernoulli(cfg_.sim.disturb_prob);
    const double fx =
        episode_rng_.uniform(-cfg_.sim.disturb_force, cfg_.sim.disturb_force);
    const double fz =
        episode_rng_.uniform(-cfg_.sim.disturb_force, cfg_.sim.disturb_force);
    if (fire)
      sim_->apply_disturbance(Eigen::Vector2d(fx, fz),
                              cfg_.sim.disturb_duration);
  }

  std::array<double, 4> target;
  for (int j = 0; j < 4; ++j)
    target[j] = cfg_.sim.theta_stand[j] + cfg_.env.action_scale * a(j);

  const PdGains gains{cfg_.sim.kp, cfg_.sim.kd};
  const double dt_pd = 1.0 / cfg_.sim.pd_hz;
  bool ok = true;
  for (int k = 0; k < pd_per_control_ && ok; ++k) {
    const auto tau = pd_torque(target, sim_->state(), gains, sim_->dr(),
                               cfg_.sim.torque_limit);
    ok = sim_->step(tau, terrain_, dt_pd, cfg_.sim.substeps);
  }
  ++tick_;

  StepResult out;
  out.blown_up = !ok;
  blown_up_ = blown_up_ || !ok;
  if (!blown_up_) {
    out.reward = compute_reward(sim_->state(), a, prev_action_, cfg_.env);
    // Live bound check from the configured guards; holds in every build.
    const double hi = cfg_.env.w_upright * 2 + cfg_.env.w_contact + 1e-9;
    if (!(out.reward.total <= hi && out.reward.total >= -reward_floor_ - 1e-9))
      throw std::logic_error("per-step reward " +
                             std::to_string(out.reward.total) +
                             " escaped its configured bounds");
  }
  episode_reward_ += out.reward.total;

  window_.push_back(sim_->state());
  while (static_cast<int>(window_.size()) > window_size_) window_.pop_front();
  if (static_cast<int>(window_.size()) == window_size_ && !blown_up_) {
    const std::vector<RobotState> snapshot(window_.begin(), window_.end());
    out.recovered_now = is_recovered(snapshot, cfg_.env);
    if (out.recovered_now && first_recovered_tick_ < 0)
      first_recovered_tick_ = tick_;
  }
  recovered_ever_ = recovered_ever_ || out.recovered_now;
  out.recovered_ever = recovered_ever_;

  out.obs = observe(sim_->state(), a, Eigen::Vector2d::Zero());
  temporal_.push(out.obs.to_vector());
  out.priv = assemble_privileged(out.obs);
  out.base_velocity = Eigen::Vector2d(sim_->state().vx, sim_->state().vz);
  prev_action_ = a;

  out.timeout = tick_ >= episode_steps_;
  out.done = out.timeout || out.blown_up;
  return out;
}

void RecoveryEnv::finish_episode(bool recovered) {
  success_window_.push_back(recovered);
  if (static_cast<int>(success_window_.size()) <
      cfg_.env.curriculum_window)
    return;
  double frac = 0.0;
  for (bool s : success_window_) frac += s ? 1.0 : 0.0;
  frac /= static_cast<double>(success_window_.size());
  const int next = curriculum_advance(level_, frac, cfg_.env);
  level_ = std::min(next, cfg_.env.max_level);
  success_window_.clear();
}

std::optional<double> RecoveryEnv::time_to_recover() const {
  if (first_recovered_tick_ < 0) return std::nullopt;
  return first_recovered_tick_ / cfg_.env.control_hz;
}

}  // namespace riser
