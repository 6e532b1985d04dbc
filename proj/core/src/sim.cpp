#include "riser/sim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "riser/rng.hpp"

namespace riser {

namespace {
// q-vector layout: [x, z, roll, L hip, L knee, R hip, R knee].
// Chain angles: 0 trunk, 1 L upper, 2 L lower, 3 R upper, 4 R lower.
constexpr int kChainDeps[5][3] = {
    {2, -1, -1}, {2, 3, -1}, {2, 3, 4}, {2, 5, -1}, {2, 5, 6}};
constexpr int kChainDepCount[5] = {1, 2, 3, 2, 3};
}  // namespace

RobotModel RobotModel::from_config(const SimConfig& cfg) {
  RobotModel m;
  m.body_mass = cfg.body_mass;
  m.body_inertia = cfg.body_inertia;
  m.half_width = cfg.body_half_width;
  m.half_height = cfg.body_half_height;
  m.upper_mass = cfg.upper_mass;
  m.upper_length = cfg.upper_length;
  m.upper_com = cfg.upper_length / 2;
  m.upper_inertia = cfg.upper_mass * cfg.upper_length * cfg.upper_length / 12;
  m.lower_mass = cfg.lower_mass;
  m.lower_length = cfg.lower_length;
  m.lower_com = cfg.lower_length / 2;
  m.lower_inertia = cfg.lower_mass * cfg.lower_length * cfg.lower_length / 12;
  m.foot_radius = cfg.foot_radius;
  m.torque_limit = cfg.torque_limit;
  for (int j = 0; j < 4; ++j) {
    const double lim = (j % 2 == 0) ? cfg.hip_limit : cfg.knee_limit;
    m.joint_min[j] = -lim;
    m.joint_max[j] = lim;
  }
  m.theta_stand = cfg.theta_stand;
  return m;
}

DomainRandomization sample_domain_randomization(Rng& rng,
                                                const SimConfig& cfg) {
  DomainRandomization dr;
  dr.payload = rng.uniform(cfg.payload_min, cfg.payload_max);
  dr.kp_factor = rng.uniform(cfg.kp_factor_min, cfg.kp_factor_max);
  dr.kd_factor = rng.uniform(cfg.kd_factor_min, cfg.kd_factor_max);
  dr.motor_strength =
      rng.uniform(cfg.motor_strength_min, cfg.motor_strength_max);
  dr.com_shift = rng.uniform(-cfg.com_shift_mm, cfg.com_shift_mm) / 1000.0;
  return dr;
}

std::array<double, 4> pd_torque(const std::array<double, 4>& theta_target,
                                const RobotState& state, const PdGains& gains,
                                const DomainRandomization& dr,
                                double torque_limit) {
  std::array<double, 4> tau;
  const double cap = dr.motor_strength * torque_limit;
  for (int j = 0; j < 4; ++j) {
    const double raw = dr.kp_factor * gains.kp * (theta_target[j] - state.q[j]) -
                       dr.kd_factor * gains.kd * state.dq[j];
    tau[j] = std::clamp(raw, -cap, cap);
  }
  return tau;
}

PlanarSim::PlanarSim(const SimConfig& cfg, const DomainRandomization& dr)
    : cfg_(cfg), model_(RobotModel::from_config(cfg)), dr_(dr) {
  build_kinematics();
}

void PlanarSim::build_kinematics() {
  const double w = model_.half_width;
  const double h = model_.half_height;
  auto term = [](double len, double phase, int chain) {
    return Term{len, std::cos(phase), std::sin(phase), chain};
  };
  const Term hip_l = term(w, M_PI, 0);
  const Term hip_r = term(w, 0.0, 0);

  auto make_point = [](std::initializer_list<Term> ts, double radius) {
    Point p;
    p.radius = radius;
    for (const Term& t : ts) p.terms[p.n_terms++] = t;
    return p;
  };

  // trunk
  bodies_[0] = {make_point({}, 0.0), model_.body_mass, model_.body_inertia, 0};
  // payload point mass riding on the trunk top
  const double pr = std::hypot(dr_.com_shift, h);
  const double pphase = std::atan2(h, dr_.com_shift);
  bodies_[1] = {make_point({term(pr, pphase, 0)}, 0.0), dr_.payload, 0.0, 0};
  // L upper, L lower
  bodies_[2] = {make_point({hip_l, term(model_.upper_com, -M_PI_2, 1)}, 0.0),
                model_.upper_mass, model_.upper_inertia, 1};
  bodies_[3] = {make_point({hip_l, term(model_.upper_length, -M_PI_2, 1),
                            term(model_.lower_com, -M_PI_2, 2)},
                           0.0),
                model_.lower_mass, model_.lower_inertia, 2};
  // R upper, R lower
  bodies_[4] = {make_point({hip_r, term(model_.upper_com, -M_PI_2, 3)}, 0.0),
                model_.upper_mass, model_.upper_inertia, 3};
  bodies_[5] = {make_point({hip_r, term(model_.upper_length, -M_PI_2, 3),
                            term(model_.lower_com, -M_PI_2, 4)},
                           0.0),
                model_.lower_mass, model_.lower_inertia, 4};

  // feet
  contact_points_[0] =
      make_point({hip_l, term(model_.upper_length, -M_PI_2, 1),
                  term(model_.lower_length, -M_PI_2, 2)},
                 model_.foot_radius);
  contact_points_[1] =
      make_point({hip_r, term(model_.upper_length, -M_PI_2, 3),
                  term(model_.lower_length, -M_PI_2, 4)},
                 model_.foot_radius);
  // trunk corners
  const double cr = std::hypot(w, h);
  contact_points_[2] = make_point({term(cr, std::atan2(-h, -w), 0)}, 0.0);
  contact_points_[3] = make_point({term(cr, std::atan2(-h, w), 0)}, 0.0);
  contact_points_[4] = make_point({term(cr, std::atan2(h, -w), 0)}, 0.0);
  contact_points_[5] = make_point({term(cr, std::atan2(h, w), 0)}, 0.0);
}

void PlanarSim::refresh_chains() const {
  chain_angle_[0] = state_.roll;
  chain_angle_[1] = state_.roll + state_.q[0];
  chain_angle_[2] = state_.roll + state_.q[0] + state_.q[1];
  chain_angle_[3] = state_.roll + state_.q[2];
  chain_angle_[4] = state_.roll + state_.q[2] + state_.q[3];
  chain_rate_[0] = state_.omega;
  chain_rate_[1] = state_.omega + state_.dq[0];
  chain_rate_[2] = state_.omega + state_.dq[0] + state_.dq[1];
  chain_rate_[3] = state_.omega + state_.dq[2];
  chain_rate_[4] = state_.omega + state_.dq[2] + state_.dq[3];
  for (int c = 0; c < 5; ++c) {
    chain_cos_[c] = std::cos(chain_angle_[c]);
    chain_sin_[c] = std::sin(chain_angle_[c]);
  }
}

Eigen::Vector2d PlanarSim::point_position(const Point& p) const {
  Eigen::Vector2d r(state_.x, state_.z);
  for (int i = 0; i < p.n_terms; ++i) {
    const Term& t = p.terms[i];
    const double ca = chain_cos_[t.chain] * t.cp - chain_sin_[t.chain] * t.sp;
    const double sa = chain_sin_[t.chain] * t.cp + chain_cos_[t.chain] * t.sp;
    r.x() += t.len * ca;
    r.y() += t.len * sa;
  }
  return r;
}

Eigen::Vector2d PlanarSim::point_velocity(const Point& p) const {
  Eigen::Vector2d v(state_.vx, state_.vz);
  for (int i = 0; i < p.n_terms; ++i) {
    const Term& t = p.terms[i];
    const double ca = chain_cos_[t.chain] * t.cp - chain_sin_[t.chain] * t.sp;
    const double sa = chain_sin_[t.chain] * t.cp + chain_cos_[t.chain] * t.sp;
    const double rate = chain_rate_[t.chain];
    v.x() += -t.len * sa * rate;
    v.y() += t.len * ca * rate;
  }
  return v;
}

void PlanarSim::point_jacobian(const Point& p,
                               Eigen::Matrix<double, 2, kDof>& J) const {
  J.setZero();
  J(0, 0) = 1.0;
  J(1, 1) = 1.0;
  for (int i = 0; i < p.n_terms; ++i) {
    const Term& t = p.terms[i];
    const double ca = chain_cos_[t.chain] * t.cp - chain_sin_[t.chain] * t.sp;
    const double sa = chain_sin_[t.chain] * t.cp + chain_cos_[t.chain] * t.sp;
    const int nd = kChainDepCount[t.chain];
    for (int d = 0; d < nd; ++d) {
      const int col = kChainDeps[t.chain][d];
      J(0, col) += -t.len * sa;
      J(1, col) += t.len * ca;
    }
  }
}

Eigen::Vector2d PlanarSim::point_vel_product_accel(const Point& p) const {
  // With affine chain angles, the only q-dot-squared acceleration is the
  // centripetal term -len * u(angle) * rate^2 per link segment.
  Eigen::Vector2d a = Eigen::Vector2d::Zero();
  for (int i = 0; i < p.n_terms; ++i) {
    const Term& t = p.terms[i];
    const double ca = chain_cos_[t.chain] * t.cp - chain_sin_[t.chain] * t.sp;
    const double sa = chain_sin_[t.chain] * t.cp + chain_cos_[t.chain] * t.sp;
    const double r2 = chain_rate_[t.chain] * chain_rate_[t.chain];
    a.x() -= t.len * ca * r2;
    a.y() -= t.len * sa * r2;
  }
  return a;
}

bool PlanarSim::micro_step(const std::array<double, 4>& tau,
                           const Heightfield& hf, double dt) {
  refresh_chains();

  Eigen::Matrix<double, kDof, kDof> M;
  M.setZero();
  Eigen::Matrix<double, kDof, 1> Q;
  Q.setZero();
  Eigen::Matrix<double, kDof, 1> qdot;
  qdot << state_.vx, state_.vz, state_.omega, state_.dq[0], state_.dq[1],
      state_.dq[2], state_.dq[3];

  Eigen::Matrix<double, 2, kDof> J;
  for (const Body& b : bodies_) {
    if (b.mass == 0.0 && b.inertia == 0.0) continue;
    point_jacobian(b.com, J);
    M.noalias() += b.mass * J.transpose() * J;
    const int nd = kChainDepCount[b.chain];
    for (int i = 0; i < nd; ++i)
      for (int j = 0; j < nd; ++j)
        M(kChainDeps[b.chain][i], kChainDeps[b.chain][j]) += b.inertia;
    const Eigen::Vector2d avp = point_vel_product_accel(b.com);
    Eigen::Vector2d f = -b.mass * avp;
    f.y() += -b.mass * cfg_.gravity;
    Q.noalias() += J.transpose() * f;
  }

  for (int j = 0; j < 4; ++j) {
    Q(3 + j) += tau[j];
    // Soft torque beyond the joint limit; a hard stop below caps overshoot.
    if (state_.q[j] > model_.joint_max[j]) {
      Q(3 + j) += -cfg_.joint_limit_stiffness *
                      (state_.q[j] - model_.joint_max[j]) -
                  cfg_.joint_limit_damping * state_.dq[j];
    } else if (state_.q[j] < model_.joint_min[j]) {
      Q(3 + j) += -cfg_.joint_limit_stiffness *
                      (state_.q[j] - model_.joint_min[j]) -
                  cfg_.joint_limit_damping * state_.dq[j];
    }
  }

  if (disturbance_left_ > 0.0) {
    Q(0) += disturbance_.x();
    Q(1) += disturbance_.y();
    disturbance_left_ -= dt;
  }

  for (int ci = 0; ci < kNumContacts; ++ci) {
    const Point& cp = contact_points_[ci];
    const Eigen::Vector2d p = point_position(cp);
    const double ground = hf.height_at(p.x());
    const double slope = hf.slope_at(p.x());
    const double inv = 1.0 / std::sqrt(1.0 + slope * slope);
    const double gap = (p.y() - cp.radius) - ground;
    const double depth = -gap * inv;
    ContactPointState& cs = state_.contact[ci];
    if (depth <= 0.0) {
      cs.active = false;
      cs.anchor_x = p.x();
      continue;
    }
    const Eigen::Vector2d n(-slope * inv, inv);
    const Eigen::Vector2d t(inv, slope * inv);
    const Eigen::Vector2d v = point_velocity(cp);
    const double vn = v.dot(n);
    // Damping bounded by the spring force: contact impulses stay
    // penetration-proportional, so fast impacts cannot pump energy.
    const double f_spring = cfg_.contact_stiffness * depth;
    const double f_damp =
        std::clamp(-cfg_.contact_damping * vn, -f_spring, f_spring);
    double fn = f_spring + f_damp;
    if (fn < 0.0) fn = 0.0;
    const double tangent_disp = (p.x() - cs.anchor_x) / inv;
    const double cap = cfg_.friction_mu * fn;
    // Stick spring saturates at the friction cone; only true spring
    // saturation re-seats the anchor (sliding). The damping contribution is
    // clamped without moving the anchor, so vibration cannot ratchet it.
    double fs = -cfg_.friction_stiffness * tangent_disp;
    if (std::abs(fs) > cap) {
      fs = std::copysign(cap, fs);
      cs.anchor_x = cfg_.friction_stiffness > 0.0
                        ? p.x() + fs * inv / cfg_.friction_stiffness
                        : p.x();
    }
    const double ft = std::clamp(fs - cfg_.friction_damping * v.dot(t),
                                 -cap, cap);
    cs.active = true;
    point_jacobian(cp, J);
    Q.noalias() += J.transpose() * (fn * n + ft * t);
  }

  Eigen::Matrix<double, kDof, 1> acc;
  if (base_fixed_) {
    acc.setZero();
    acc.tail<4>() =
        M.bottomRightCorner<4, 4>().ldlt().solve(Q.tail<4>());
  } else {
    acc = M.ldlt().solve(Q);
  }

  qdot += dt * acc;
  if (base_fixed_) qdot.head<3>().setZero();
  state_.vx = qdot(0);
  state_.vz = qdot(1);
  state_.omega = qdot(2);
  state_.x += dt * qdot(0);
  state_.z += dt * qdot(1);
  state_.roll += dt * qdot(2);
  for (int j = 0; j < 4; ++j) {
    state_.dq[j] = qdot(3 + j);
    state_.q[j] += dt * state_.dq[j];
    // Hard stop just past the soft-limit band.
    const double lo = model_.joint_min[j] - 0.05;
    const double hi = model_.joint_max[j] + 0.05;
    if (state_.q[j] > hi) {
      state_.q[j] = hi;
      if (state_.dq[j] > 0) state_.dq[j] = 0;
    } else if (state_.q[j] < lo) {
      state_.q[j] = lo;
      if (state_.dq[j] < 0) state_.dq[j] = 0;
    }
  }

  const double g = cfg_.vel_guard;
  bool ok = std::isfinite(state_.x) && std::isfinite(state_.z) &&
            std::isfinite(state_.roll) && std::abs(state_.vx) <= g &&
            std::abs(state_.vz) <= g && std::abs(state_.omega) <= g;
  for (int j = 0; j < 4; ++j)
    ok = ok && std::isfinite(state_.q[j]) && std::abs(state_.dq[j]) <= g;
  return ok;
}

bool PlanarSim::step(const std::array<double, 4>& tau, const Heightfield& hf,
                     double dt, int substeps) {
  // Entry guard: refuse to integrate an already-corrupt state.
  const double g = cfg_.vel_guard;
  bool sane = std::isfinite(state_.x) && std::isfinite(state_.z) &&
              std::isfinite(state_.roll) && std::abs(state_.vx) <= g &&
              std::abs(state_.vz) <= g && std::abs(state_.omega) <= g;
  for (int j = 0; j < 4; ++j)
    sane = sane && std::isfinite(state_.q[j]) && std::abs(state_.dq[j]) <= g;
  if (!sane) return false;

  const std::array<double, 4> dq_start = state_.dq;
  const double h = dt / substeps;
  bool ok = true;
  for (int s = 0; s < substeps && ok; ++s) ok = micro_step(tau, hf, h);
  for (int j = 0; j < 4; ++j)
    state_.ddq[j] = (state_.dq[j] - dq_start[j]) / dt;
  state_.tau = tau;
  // Geometric contact flags at the stored (post-step) pose.
  refresh_chains();
  for (int f = 0; f < 2; ++f) {
    const Eigen::Vector2d p = point_position(contact_points_[f]);
    const double gap =
        (p.y() - contact_points_[f].radius) - hf.height_at(p.x());
    state_.foot_contact[f] = gap <= 0.0;
  }
  return ok;
}

void PlanarSim::apply_disturbance(const Eigen::Vector2d& force,
                                  double duration) {
  disturbance_ = force;
  disturbance_left_ = duration;
}

Eigen::Vector2d PlanarSim::active_disturbance() const {
  return disturbance_left_ > 0.0 ? disturbance_ : Eigen::Vector2d::Zero();
}

Eigen::Vector2d PlanarSim::foot_position(int side) const {
  refresh_chains();
  return point_position(contact_points_[side]);
}

std::array<Eigen::Vector2d, kNumContacts> PlanarSim::contact_positions()
    const {
  refresh_chains();
  std::array<Eigen::Vector2d, kNumContacts> out;
  for (int i = 0; i < kNumContacts; ++i)
    out[i] = point_position(contact_points_[i]);
  return out;
}

double PlanarSim::min_terrain_clearance(const Heightfield& hf) const {
  refresh_chains();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kNumContacts; ++i) {
    const Eigen::Vector2d p = point_position(contact_points_[i]);
    best = std::min(
        best, (p.y() - contact_points_[i].radius) - hf.height_at(p.x()));
  }
  return best;
}

double PlanarSim::mechanical_energy() const {
  refresh_chains();
  double e = 0.0;
  for (const Body& b : bodies_) {
    if (b.mass == 0.0 && b.inertia == 0.0) continue;
    const Eigen::Vector2d v = point_velocity(b.com);
    const Eigen::Vector2d p = point_position(b.com);
    const double w = chain_rate_[b.chain];
    e += 0.5 * b.mass * v.squaredNorm() + 0.5 * b.inertia * w * w +
         b.mass * cfg_.gravity * p.y();
  }
  return e;
}

Eigen::Vector2d PlanarSim::total_momentum() const {
  refresh_chains();
  Eigen::Vector2d mom = Eigen::Vector2d::Zero();
  for (const Body& b : bodies_) {
    if (b.mass == 0.0) continue;
    mom += b.mass * point_velocity(b.com);
  }
  return mom;
}

RobotState sample_drop_pose(Rng& rng, const Heightfield& hf,
                            const SimConfig& cfg) {
  RobotState s;
  s.roll = rng.uniform(cfg.drop_roll_min, cfg.drop_roll_max);
  const RobotModel model = RobotModel::from_config(cfg);
  for (int j = 0; j < 4; ++j)
    s.q[j] = rng.uniform(model.joint_min[j], model.joint_max[j]);
  const double mid = hf.origin_x + (hf.end_x() - hf.origin_x) / 2;
  const double span = (hf.end_x() - hf.origin_x) / 8;
  s.x = mid + rng.uniform(-span, span);
  s.z = hf.height_at(s.x) +
        rng.uniform(cfg.drop_height_min, cfg.drop_height_max);

  PlanarSim sim(cfg, DomainRandomization{});
  sim.set_state(s);
  const double clearance = sim.min_terrain_clearance(hf);
  constexpr double kMargin = 0.01;
  if (clearance < kMargin) s.z += kMargin - clearance;
  sim.set_state(s);
  const auto points = sim.contact_positions();
  for (int ci = 0; ci < kNumContacts; ++ci) {
    s.contact[ci].active = false;
    s.contact[ci].anchor_x = points[ci].x();
  }
  return s;
}

RobotState step_dynamics(const SimConfig& cfg, const DomainRandomization& dr,
                         const RobotState& state,
                         const std::array<double, 4>& tau,
                         const Heightfield& hf, double dt, bool& ok) {
  PlanarSim sim(cfg, dr);
  sim.set_state(state);
  ok = sim.step(tau, hf, dt, cfg.substeps);
  return sim.state();
}

}  // namespace riser
