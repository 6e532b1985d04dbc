#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>

#include "riser/config.hpp"
#include "riser/terrain.hpp"

namespace riser {

class Rng;

inline constexpr int kNumJoints = 4;    // L hip, L knee, R hip, R knee
inline constexpr int kNumContacts = 6;  // 2 feet + 4 trunk corners
inline constexpr int kDof = 7;          // x, z, roll, 4 joints

/// Frontal-plane quadruped: rectangular trunk with one 2-link leg per side.
/// Each leg's hip joint abducts in the plane; the knee joint folds the
/// lower link. Joint order everywhere: [L hip, L knee, R hip, R knee].
struct RobotModel {
  double body_mass = 7.5;
  double body_inertia = 0.0537;
  double half_width = 0.135;
  double half_height = 0.057;
  double upper_mass = 2.0;
  double upper_length = 0.21;
  double upper_com = 0.105;
  double upper_inertia = 0.00735;
  double lower_mass = 0.35;
  double lower_length = 0.21;
  double lower_com = 0.105;
  double lower_inertia = 0.0012863;
  double foot_radius = 0.02;
  double torque_limit = 33.5;
  std::array<double, 4> joint_min{};
  std::array<double, 4> joint_max{};
  std::array<double, 4> theta_stand{};

  static RobotModel from_config(const SimConfig& cfg);
};

struct PdGains {
  double kp = 28.0;
  double kd = 0.7;
};

struct DomainRandomization {
  double payload = 0.0;         // kg, point mass on the trunk top
  double kp_factor = 1.0;
  double kd_factor = 1.0;
  double motor_strength = 1.0;  // scales the torque limit
  double com_shift = 0.0;       // m, payload attachment offset along x
};

/// Per-contact friction bookkeeping (stick anchor for the tangential
/// spring). Carried in RobotState so stepping stays a pure function of
/// (model, state, torque, terrain).
struct ContactPointState {
  bool active = false;
  double anchor_x = 0.0;
};

struct RobotState {
  double x = 0.0, z = 0.0, roll = 0.0;
  double vx = 0.0, vz = 0.0, omega = 0.0;
  std::array<double, 4> q{};    // joint angles
  std::array<double, 4> dq{};   // joint velocities
  std::array<double, 4> ddq{};  // joint accelerations over the last PD tick
  std::array<double, 4> tau{};  // torques applied during the last PD tick
  std::array<bool, 2> foot_contact{};
  std::array<ContactPointState, kNumContacts> contact{};
};

/// Uniform draw of every randomized parameter from its configured range.
DomainRandomization sample_domain_randomization(Rng& rng, const SimConfig& cfg);

/// Random fall pose: roll uniform in the configured range, joints uniform
/// within limits, base 0.3-0.6 m above the terrain under it and lifted
/// further if any contact point would start penetrated. Velocities zero.
RobotState sample_drop_pose(Rng& rng, const Heightfield& hf,
                            const SimConfig& cfg);

/// tau_j = clamp(kp_f*Kp*(target_j - q_j) - kd_f*Kd*dq_j,
///               +-motor_strength*torque_limit)
std::array<double, 4> pd_torque(const std::array<double, 4>& theta_target,
                                const RobotState& state, const PdGains& gains,
                                const DomainRandomization& dr,
                                double torque_limit);

/// Articulated planar dynamics with penalty contacts. One instance per
/// worker; instances never share mutable state.
class PlanarSim {
 public:
  PlanarSim(const SimConfig& cfg, const DomainRandomization& dr);

  void set_state(const RobotState& s) { state_ = s; }
  const RobotState& state() const { return state_; }
  const RobotModel& model() const { return model_; }
  const DomainRandomization& dr() const { return dr_; }

  /// Pins base x, z, roll (test rigs: pendulum configurations).
  void set_base_fixed(bool fixed) { base_fixed_ = fixed; }

  /// Advances one PD tick of length dt, holding tau, using `substeps`
  /// semi-implicit micro-steps. Returns false on numerical blow-up (any
  /// non-finite coordinate or velocity beyond the guard); the caller
  /// terminates the episode.
  bool step(const std::array<double, 4>& tau, const Heightfield& hf,
            double dt, int substeps);

  /// Adds a force to the base wrench for `duration` seconds of sim time.
  void apply_disturbance(const Eigen::Vector2d& force, double duration);
  /// Currently active disturbance (zero when none), for privileged state.
  Eigen::Vector2d active_disturbance() const;

  Eigen::Vector2d foot_position(int side) const;
  std::array<Eigen::Vector2d, kNumContacts> contact_positions() const;
  /// Smallest clearance (gap minus radius) between any contact point and
  /// the terrain under it; negative means penetration.
  double min_terrain_clearance(const Heightfield& hf) const;

  /// Kinetic plus gravitational potential energy of every body including
  /// the payload point mass.
  double mechanical_energy() const;
  /// Linear momentum summed over all bodies.
  Eigen::Vector2d total_momentum() const;

 private:
  struct Term {
    double len = 0.0;
    double cp = 1.0;  // cos/sin of the fixed phase offset
    double sp = 0.0;
    int chain = 0;  // index into the 5 kinematic chain angles
  };
  struct Point {
    std::array<Term, 3> terms;
    int n_terms = 0;
    double radius = 0.0;
  };
  struct Body {
    Point com;
    double mass = 0.0;
    double inertia = 0.0;
    int chain = 0;
  };

  void build_kinematics();
  void refresh_chains() const;  // trig caches for the current state
  Eigen::Vector2d point_position(const Point& p) const;
  Eigen::Vector2d point_velocity(const Point& p) const;
  void point_jacobian(const Point& p, Eigen::Matrix<double, 2, kDof>& J) const;
  Eigen::Vector2d point_vel_product_accel(const Point& p) const;
  bool micro_step(const std::array<double, 4>& tau, const Heightfield& hf,
                  double dt);

  SimConfig cfg_;
  RobotModel model_;
  DomainRandomization dr_;
  RobotState state_;
  bool base_fixed_ = false;

  std::array<Body, 6> bodies_;  // trunk, payload, L upper/lower, R upper/lower
  int n_bodies_ = 6;
  std::array<Point, kNumContacts> contact_points_;

  // chain angle/rate caches; chains: trunk, L upper, L lower, R upper, R lower
  mutable std::array<double, 5> chain_angle_{};
  mutable std::array<double, 5> chain_rate_{};
  mutable std::array<double, 5> chain_cos_{};
  mutable std::array<double, 5> chain_sin_{};

  Eigen::Vector2d disturbance_ = Eigen::Vector2d::Zero();
  double disturbance_left_ = 0.0;
};

/// One-shot stepping with explicit state in and out; the class form above
/// is what the environment uses.
RobotState step_dynamics(const SimConfig& cfg, const DomainRandomization& dr,
                         const RobotState& state,
                         const std::array<double, 4>& tau,
                         const Heightfield& hf, double dt, bool& ok);

}  // namespace riser
