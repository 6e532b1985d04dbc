#include "riser/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace riser {
namespace {

enum class Kind { F64, I32, U64, Bool, F64x4, IntList, StrList };

struct FieldRef {
  std::string key;
  Kind kind;
  void* p;
  const char* comment;
};

std::vector<FieldRef> field_table(RunConfig& c) {
  std::vector<FieldRef> t;
  auto f = [&](const char* k, double& v, const char* cm = "") {
    t.push_back({k, Kind::F64, &v, cm});
  };
  auto i = [&](const char* k, int& v, const char* cm = "") {
    t.push_back({k, Kind::I32, &v, cm});
  };
  auto u = [&](const char* k, std::uint64_t& v, const char* cm = "") {
    t.push_back({k, Kind::U64, &v, cm});
  };
  auto b = [&](const char* k, bool& v, const char* cm = "") {
    t.push_back({k, Kind::Bool, &v, cm});
  };
  auto a4 = [&](const char* k, std::array<double, 4>& v, const char* cm = "") {
    t.push_back({k, Kind::F64x4, &v, cm});
  };
  auto il = [&](const char* k, std::vector<int>& v, const char* cm = "") {
    t.push_back({k, Kind::IntList, &v, cm});
  };
  auto sl = [&](const char* k, std::vector<std::string>& v,
                const char* cm = "") {
    t.push_back({k, Kind::StrList, &v, cm});
  };

  i("schema_version", c.schema_version);
  u("seed", c.seed, "global seed; every stream derives from it");

  auto& tr = c.terrain;
  f("terrain.cell_size", tr.cell_size, "m");
  f("terrain.extent", tr.extent, "m");
  i("terrain.scan_points", tr.scan_points, "height-scan entries, odd");
  f("terrain.scan_spacing", tr.scan_spacing, "m");
  f("terrain.block_width_min", tr.block_width_min, "m");
  f("terrain.block_width_max", tr.block_width_max, "m");
  f("terrain.blocks_per_meter", tr.blocks_per_meter);
  f("terrain.rough_correlation", tr.rough_correlation, "m");
  f("terrain.slope_min_deg", tr.slope_min_deg, "grade at level 0");
  f("terrain.slope_max_deg", tr.slope_max_deg, "grade at level 9");
  f("terrain.stair_tread", tr.stair_tread, "m");

  auto& s = c.sim;
  f("sim.gravity", s.gravity, "m/s^2");
  f("sim.pd_hz", s.pd_hz, "PD/torque rate");
  i("sim.substeps", s.substeps, "integrator micro-steps per PD tick");
  f("sim.contact_stiffness", s.contact_stiffness, "N/m");
  f("sim.contact_damping", s.contact_damping, "N s/m");
  f("sim.friction_stiffness", s.friction_stiffness, "N/m");
  f("sim.friction_damping", s.friction_damping, "N s/m");
  f("sim.friction_mu", s.friction_mu);
  f("sim.joint_limit_stiffness", s.joint_limit_stiffness, "N m/rad");
  f("sim.joint_limit_damping", s.joint_limit_damping, "N m s/rad");
  f("sim.torque_limit", s.torque_limit, "N m");
  f("sim.kp", s.kp, "N m/rad");
  f("sim.kd", s.kd, "N m s/rad");
  f("sim.body_mass", s.body_mass, "kg");
  f("sim.body_inertia", s.body_inertia, "kg m^2");
  f("sim.body_half_width", s.body_half_width, "m");
  f("sim.body_half_height", s.body_half_height, "m");
  f("sim.upper_mass", s.upper_mass, "kg");
  f("sim.upper_length", s.upper_length, "m");
  f("sim.lower_mass", s.lower_mass, "kg");
  f("sim.lower_length", s.lower_length, "m");
  f("sim.foot_radius", s.foot_radius, "m");
  f("sim.hip_limit", s.hip_limit, "rad");
  f("sim.knee_limit", s.knee_limit, "rad");
  a4("sim.theta_stand", s.theta_stand, "self-righted joint angles, rad");
  f("sim.vel_guard", s.vel_guard, "blow-up bound");
  f("sim.payload_min", s.payload_min, "kg");
  f("sim.payload_max", s.payload_max, "kg");
  f("sim.kp_factor_min", s.kp_factor_min);
  f("sim.kp_factor_max", s.kp_factor_max);
  f("sim.kd_factor_min", s.kd_factor_min);
  f("sim.kd_factor_max", s.kd_factor_max);
  f("sim.motor_strength_min", s.motor_strength_min);
  f("sim.motor_strength_max", s.motor_strength_max);
  f("sim.com_shift_mm", s.com_shift_mm, "CoM shift drawn from +-this");
  f("sim.disturb_interval", s.disturb_interval, "s");
  f("sim.disturb_prob", s.disturb_prob);
  f("sim.disturb_force", s.disturb_force, "N per axis");
  f("sim.disturb_duration", s.disturb_duration, "s");
  f("sim.drop_height_min", s.drop_height_min, "m above terrain");
  f("sim.drop_height_max", s.drop_height_max, "m above terrain");
  f("sim.drop_roll_min", s.drop_roll_min, "rad");
  f("sim.drop_roll_max", s.drop_roll_max, "rad");

  auto& e = c.env;
  f("env.control_hz", e.control_hz, "policy rate");
  f("env.episode_seconds", e.episode_seconds);
  i("env.history_len", e.history_len, "H; temporal obs stacks H+1 frames");
  f("env.action_scale", e.action_scale, "rad per action unit");
  f("env.action_clip", e.action_clip);
  f("env.recover_gz", e.recover_gz);
  f("env.recover_omega", e.recover_omega, "rad/s");
  f("env.recover_window", e.recover_window, "s");
  sl("env.terrain_kinds", e.terrain_kinds, "training terrain mix");
  i("env.max_level", e.max_level, "curriculum cap");
  f("env.w_upright", e.w_upright, "reward weight");
  f("env.w_contact", e.w_contact, "reward weight");
  f("env.w_joint_accel", e.w_joint_accel, "reward weight");
  f("env.w_joint_power", e.w_joint_power, "reward weight");
  f("env.w_action_rate", e.w_action_rate, "reward weight");
  i("env.curriculum_window", e.curriculum_window, "trailing episodes");
  f("env.promote_threshold", e.promote_threshold);
  f("env.demote_threshold", e.demote_threshold);

  auto& n = c.nets;
  il("nets.actor_hidden", n.actor_hidden);
  il("nets.critic_hidden", n.critic_hidden);
  il("nets.cenet_hidden", n.cenet_hidden);
  il("nets.decoder_hidden", n.decoder_hidden);
  i("nets.latent_dim", n.latent_dim);
  f("nets.beta", n.beta, "KL weight in the estimator loss");
  f("nets.logstd_init", n.logstd_init);
  f("nets.grad_clip", n.grad_clip, "global norm");
  f("nets.adam_beta1", n.adam_beta1);
  f("nets.adam_beta2", n.adam_beta2);
  f("nets.adam_eps", n.adam_eps);

  auto& p = c.ppo;
  f("ppo.clip", p.clip);
  f("ppo.gae_lambda", p.gae_lambda);
  f("ppo.gamma", p.gamma);
  f("ppo.lr", p.lr);
  i("ppo.n_envs", p.n_envs, "desk-scale default; reference setup uses 4096");
  i("ppo.rollout_steps", p.rollout_steps, "control steps per iteration");
  i("ppo.epochs", p.epochs);
  i("ppo.minibatches", p.minibatches);
  f("ppo.entropy_coef", p.entropy_coef);
  f("ppo.value_coef", p.value_coef);
  f("ppo.target_kl", p.target_kl, "0 disables the early stop");
  b("ppo.baseline_mode", p.baseline_mode, "no estimator, symmetric critic");
  b("ppo.normalize_advantages", p.normalize_advantages);
  i("ppo.iterations", p.iterations);
  i("ppo.checkpoint_every", p.checkpoint_every);

  auto& v = c.eval;
  i("eval.n_robots", v.n_robots);
  i("eval.n_seeds", v.n_seeds);
  f("eval.tsne_perplexity", v.tsne_perplexity);
  i("eval.tsne_iterations", v.tsne_iterations);
  f("eval.tsne_exaggeration", v.tsne_exaggeration);
  i("eval.tsne_exaggeration_iters", v.tsne_exaggeration_iters);
  f("eval.tsne_learning_rate", v.tsne_learning_rate);
  sl("eval.latent_kinds", v.latent_kinds, "embedding scenario terrains");
  i("eval.latent_level", v.latent_level);
  i("eval.latent_episodes", v.latent_episodes, "per scenario");
  return t;
}

[[noreturn]] void fail(const std::string& key, const std::string& msg) {
  throw std::runtime_error("config: " + key + ": " + msg);
}

// Parsed scalar or list value from the file.
struct Value {
  enum class Type { Number, Bool, String, List } type;
  double num = 0;
  bool has_exact_int = false;
  std::uint64_t u64 = 0;
  bool neg = false;
  bool boolean = false;
  std::string str;
  std::vector<Value> list;
};

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

Value parse_value(const std::string& raw, const std::string& key);

Value parse_list(const std::string& inner, const std::string& key) {
  Value v;
  v.type = Value::Type::List;
  int depth = 0;
  bool in_str = false;
  std::string cur;
  auto flush = [&] {
    std::string item = trim(cur);
    if (!item.empty()) v.list.push_back(parse_value(item, key));
    cur.clear();
  };
  for (char ch : inner) {
    if (ch == '"') in_str = !in_str;
    if (!in_str) {
      if (ch == '[') ++depth;
      if (ch == ']') --depth;
      if (ch == ',' && depth == 0) {
        flush();
        continue;
      }
    }
    cur.push_back(ch);
  }
  flush();
  return v;
}

Value parse_value(const std::string& raw, const std::string& key) {
  const std::string s = trim(raw);
  if (s.empty()) fail(key, "missing value");
  Value v;
  if (s == "true" || s == "false") {
    v.type = Value::Type::Bool;
    v.boolean = (s == "true");
    return v;
  }
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') fail(key, "unterminated string");
    v.type = Value::Type::String;
    v.str = s.substr(1, s.size() - 2);
    return v;
  }
  if (s.front() == '[') {
    if (s.back() != ']') fail(key, "unterminated list");
    return parse_list(s.substr(1, s.size() - 2), key);
  }
  char* end = nullptr;
  v.type = Value::Type::Number;
  v.num = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size())
    fail(key, "cannot parse value '" + s + "'");
  if (s.find_first_of(".eE") == std::string::npos) {
    // Keep the exact integer too; doubles truncate past 2^53.
    errno = 0;
    const bool neg = s.front() == '-';
    const char* digits = s.c_str() + (neg || s.front() == '+' ? 1 : 0);
    char* iend = nullptr;
    const std::uint64_t mag = std::strtoull(digits, &iend, 10);
    if (errno == 0 && iend == s.c_str() + s.size()) {
      v.has_exact_int = true;
      v.u64 = mag;
      v.neg = neg;
    }
  }
  return v;
}

void assign(const FieldRef& fr, const Value& v) {
  switch (fr.kind) {
    case Kind::F64:
      if (v.type != Value::Type::Number) fail(fr.key, "expected a number");
      *static_cast<double*>(fr.p) = v.num;
      break;
    case Kind::I32: {
      if (v.type != Value::Type::Number || std::floor(v.num) != v.num)
        fail(fr.key, "expected an integer");
      *static_cast<int*>(fr.p) = static_cast<int>(v.num);
      break;
    }
    case Kind::U64: {
      if (v.type != Value::Type::Number || !v.has_exact_int || v.neg)
        fail(fr.key, "expected a non-negative integer");
      *static_cast<std::uint64_t*>(fr.p) = v.u64;
      break;
    }
    case Kind::Bool:
      if (v.type != Value::Type::Bool) fail(fr.key, "expected true/false");
      *static_cast<bool*>(fr.p) = v.boolean;
      break;
    case Kind::F64x4: {
      if (v.type != Value::Type::List || v.list.size() != 4)
        fail(fr.key, "expected a list of 4 numbers");
      auto& arr = *static_cast<std::array<double, 4>*>(fr.p);
      for (int k = 0; k < 4; ++k) {
        if (v.list[k].type != Value::Type::Number)
          fail(fr.key, "expected a list of 4 numbers");
        arr[k] = v.list[k].num;
      }
      break;
    }
    case Kind::IntList: {
      if (v.type != Value::Type::List || v.list.empty())
        fail(fr.key, "expected a non-empty list of integers");
      auto& out = *static_cast<std::vector<int>*>(fr.p);
      out.clear();
      for (const auto& item : v.list) {
        if (item.type != Value::Type::Number ||
            std::floor(item.num) != item.num)
          fail(fr.key, "expected a non-empty list of integers");
        out.push_back(static_cast<int>(item.num));
      }
      break;
    }
    case Kind::StrList: {
      if (v.type != Value::Type::List || v.list.empty())
        fail(fr.key, "expected a non-empty list of strings");
      auto& out = *static_cast<std::vector<std::string>*>(fr.p);
      out.clear();
      for (const auto& item : v.list) {
        if (item.type != Value::Type::String)
          fail(fr.key, "expected a non-empty list of strings");
        out.push_back(item.str);
      }
      break;
    }
  }
}

const FieldRef* find_field(const std::vector<FieldRef>& t,
                           const std::string& key) {
  for (const auto& fr : t)
    if (fr.key == key) return &fr;
  return nullptr;
}

std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

void apply_text(RunConfig& cfg, const std::string& text) {
  auto table = field_table(cfg);
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']')
        throw std::runtime_error("config: line " + std::to_string(lineno) +
                                 ": malformed section header");
      section = trim(body.substr(1, body.size() - 2));
      continue;
    }
    const size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: line " + std::to_string(lineno) +
                               ": expected key = value");
    std::string key = trim(body.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    const FieldRef* fr = find_field(table, key);
    if (!fr) fail(key, "unknown key");
    assign(*fr, parse_value(body.substr(eq + 1), key));
  }
}

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& ovs) {
  auto table = field_table(cfg);
  for (const auto& ov : ovs) {
    const size_t eq = ov.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: override '" + ov +
                               "' is not of the form key=value");
    const std::string key = trim(ov.substr(0, eq));
    const FieldRef* fr = find_field(table, key);
    if (!fr) fail(key, "unknown key");
    assign(*fr, parse_value(ov.substr(eq + 1), key));
  }
}

std::string fmt_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string fmt_value(const FieldRef& fr) {
  switch (fr.kind) {
    case Kind::F64:
      return fmt_double(*static_cast<const double*>(fr.p));
    case Kind::I32:
      return std::to_string(*static_cast<const int*>(fr.p));
    case Kind::U64:
      return std::to_string(*static_cast<const std::uint64_t*>(fr.p));
    case Kind::Bool:
      return *static_cast<const bool*>(fr.p) ? "true" : "false";
    case Kind::F64x4: {
      const auto& a = *static_cast<const std::array<double, 4>*>(fr.p);
      std::string s = "[";
      for (int k = 0; k < 4; ++k)
        s += (k ? ", " : "") + fmt_double(a[k]);
      return s + "]";
    }
    case Kind::IntList: {
      const auto& a = *static_cast<const std::vector<int>*>(fr.p);
      std::string s = "[";
      for (size_t k = 0; k < a.size(); ++k)
        s += (k ? ", " : "") + std::to_string(a[k]);
      return s + "]";
    }
    case Kind::StrList: {
      const auto& a = *static_cast<const std::vector<std::string>*>(fr.p);
      std::string s = "[";
      for (size_t k = 0; k < a.size(); ++k)
        s += std::string(k ? ", " : "") + "\"" + a[k] + "\"";
      return s + "]";
    }
  }
  return "";
}

std::string serialize(const RunConfig& cfg, bool annotated) {
  auto table = field_table(const_cast<RunConfig&>(cfg));
  std::string out;
  std::string section;
  for (const auto& fr : table) {
    const size_t dot = fr.key.find('.');
    const std::string sec = dot == std::string::npos ? "" : fr.key.substr(0, dot);
    const std::string name = dot == std::string::npos ? fr.key : fr.key.substr(dot + 1);
    if (sec != section) {
      section = sec;
      if (!out.empty()) out += "\n";
      out += "[" + section + "]\n";
    }
    out += name + " = " + fmt_value(fr);
    if (annotated && fr.comment[0] != '\0')
      out += std::string("  # ") + fr.comment;
    out += "\n";
  }
  return out;
}

}  // namespace

int RunConfig::pd_per_control() const {
  return static_cast<int>(std::lround(sim.pd_hz / env.control_hz));
}

int RunConfig::episode_steps() const {
  return static_cast<int>(std::lround(env.episode_seconds * env.control_hz));
}

void validate_config(const RunConfig& c) {
  auto req = [](bool ok, const char* key, const char* msg) {
    if (!ok) fail(key, msg);
  };
  req(c.schema_version == 1, "schema_version", "unsupported schema version");

  const auto& t = c.terrain;
  req(t.cell_size > 0, "terrain.cell_size", "must be > 0");
  req(t.extent > 8 * c.sim.body_half_width, "terrain.extent",
      "must exceed 4x the robot body length");
  req(t.scan_points >= 1 && t.scan_points % 2 == 1, "terrain.scan_points",
      "must be odd and >= 1");
  req(t.scan_spacing > 0, "terrain.scan_spacing", "must be > 0");
  req(t.block_width_min > 0 && t.block_width_min <= t.block_width_max,
      "terrain.block_width_min", "need 0 < min <= max");
  req(t.blocks_per_meter >= 0, "terrain.blocks_per_meter", "must be >= 0");
  req(t.rough_correlation > 0, "terrain.rough_correlation", "must be > 0");
  req(t.slope_min_deg > 0 && t.slope_min_deg <= t.slope_max_deg &&
          t.slope_max_deg < 90,
      "terrain.slope_min_deg", "need 0 < min <= max < 90");
  req(t.stair_tread > 0, "terrain.stair_tread", "must be > 0");

  const auto& s = c.sim;
  req(s.gravity >= 0, "sim.gravity", "must be >= 0");
  req(s.pd_hz > 0, "sim.pd_hz", "must be > 0");
  req(s.substeps >= 1, "sim.substeps", "must be >= 1");
  req(s.contact_stiffness >= 0, "sim.contact_stiffness", "must be >= 0");
  req(s.contact_damping >= 0, "sim.contact_damping", "must be >= 0");
  req(s.friction_stiffness >= 0, "sim.friction_stiffness", "must be >= 0");
  req(s.friction_damping >= 0, "sim.friction_damping", "must be >= 0");
  req(s.friction_mu >= 0, "sim.friction_mu", "must be >= 0");
  req(s.joint_limit_stiffness >= 0, "sim.joint_limit_stiffness",
      "must be >= 0");
  req(s.joint_limit_damping >= 0, "sim.joint_limit_damping", "must be >= 0");
  req(s.torque_limit > 0, "sim.torque_limit", "must be > 0");
  req(s.kp >= 0, "sim.kp", "must be >= 0");
  req(s.kd >= 0, "sim.kd", "must be >= 0");
  req(s.body_mass > 0, "sim.body_mass", "must be > 0");
  req(s.body_inertia > 0, "sim.body_inertia", "must be > 0");
  req(s.body_half_width > 0, "sim.body_half_width", "must be > 0");
  req(s.body_half_height > 0, "sim.body_half_height", "must be > 0");
  req(s.upper_mass > 0, "sim.upper_mass", "must be > 0");
  req(s.upper_length > 0, "sim.upper_length", "must be > 0");
  req(s.lower_mass > 0, "sim.lower_mass", "must be > 0");
  req(s.lower_length > 0, "sim.lower_length", "must be > 0");
  req(s.foot_radius >= 0, "sim.foot_radius", "must be >= 0");
  req(s.hip_limit > 0, "sim.hip_limit", "must be > 0");
  req(s.knee_limit > 0, "sim.knee_limit", "must be > 0");
  for (int j = 0; j < 4; ++j) {
    const double lim = (j % 2 == 0) ? s.hip_limit : s.knee_limit;
    req(std::abs(s.theta_stand[j]) <= lim, "sim.theta_stand",
        "must lie within the joint limits");
  }
  req(s.vel_guard > 0, "sim.vel_guard", "must be > 0");
  req(s.payload_min <= s.payload_max, "sim.payload_min", "need min <= max");
  req(s.kp_factor_min > 0 && s.kp_factor_min <= s.kp_factor_max,
      "sim.kp_factor_min", "need 0 < min <= max");
  req(s.kd_factor_min > 0 && s.kd_factor_min <= s.kd_factor_max,
      "sim.kd_factor_min", "need 0 < min <= max");
  req(s.motor_strength_min > 0 && s.motor_strength_min <= s.motor_strength_max,
      "sim.motor_strength_min", "need 0 < min <= max");
  req(s.com_shift_mm >= 0, "sim.com_shift_mm", "must be >= 0");
  req(s.disturb_interval > 0, "sim.disturb_interval", "must be > 0");
  req(s.disturb_prob >= 0 && s.disturb_prob <= 1, "sim.disturb_prob",
      "must be in [0,1]");
  req(s.disturb_force >= 0, "sim.disturb_force", "must be >= 0");
  req(s.disturb_duration >= 0, "sim.disturb_duration", "must be >= 0");
  req(s.drop_height_min > 0 && s.drop_height_min <= s.drop_height_max,
      "sim.drop_height_min", "need 0 < min <= max");
  req(s.drop_roll_min <= s.drop_roll_max, "sim.drop_roll_min",
      "need min <= max");

  const auto& e = c.env;
  req(e.control_hz > 0, "env.control_hz", "must be > 0");
  const double ratio = s.pd_hz / e.control_hz;
  req(std::abs(ratio - std::lround(ratio)) < 1e-9 && ratio >= 1,
      "env.control_hz", "pd_hz must be an integer multiple of control_hz");
  req(e.episode_seconds > 0, "env.episode_seconds", "must be > 0");
  req(e.history_len >= 0, "env.history_len", "must be >= 0");
  req(e.action_scale > 0, "env.action_scale", "must be > 0");
  req(e.action_clip > 0, "env.action_clip", "must be > 0");
  req(e.recover_gz > -1 && e.recover_gz <= 0, "env.recover_gz",
      "must be in (-1, 0]");
  req(e.recover_omega > 0, "env.recover_omega", "must be > 0");
  req(e.recover_window > 0 && e.recover_window <= e.episode_seconds,
      "env.recover_window", "must be in (0, episode_seconds]");
  req(!e.terrain_kinds.empty(), "env.terrain_kinds", "must be non-empty");
  for (const auto& k : e.terrain_kinds)
    req(k == "flat" || k == "rough" || k == "discrete" || k == "slope" ||
            k == "stairs",
        "env.terrain_kinds", "unknown terrain kind");
  req(e.max_level >= 0 && e.max_level <= 9, "env.max_level",
      "must be in [0,9]");
  req(e.curriculum_window >= 1, "env.curriculum_window", "must be >= 1");
  req(e.demote_threshold >= 0 && e.demote_threshold < e.promote_threshold &&
          e.promote_threshold <= 1,
      "env.promote_threshold", "need 0 <= demote < promote <= 1");

  const auto& n = c.nets;
  auto check_hidden = [&](const std::vector<int>& h, const char* key) {
    req(!h.empty(), key, "must be non-empty");
    for (int width : h) req(width >= 1, key, "layer widths must be >= 1");
  };
  check_hidden(n.actor_hidden, "nets.actor_hidden");
  check_hidden(n.critic_hidden, "nets.critic_hidden");
  check_hidden(n.cenet_hidden, "nets.cenet_hidden");
  check_hidden(n.decoder_hidden, "nets.decoder_hidden");
  req(n.latent_dim >= 1, "nets.latent_dim", "must be >= 1");
  req(n.beta >= 0, "nets.beta", "must be >= 0");
  req(n.grad_clip > 0, "nets.grad_clip", "must be > 0");
  req(n.adam_beta1 >= 0 && n.adam_beta1 < 1, "nets.adam_beta1",
      "must be in [0,1)");
  req(n.adam_beta2 >= 0 && n.adam_beta2 < 1, "nets.adam_beta2",
      "must be in [0,1)");
  req(n.adam_eps > 0, "nets.adam_eps", "must be > 0");

  const auto& p = c.ppo;
  req(p.clip > 0 && p.clip < 1, "ppo.clip", "must be in (0,1)");
  req(p.gae_lambda > 0 && p.gae_lambda < 1, "ppo.gae_lambda",
      "must be in (0,1)");
  req(p.gamma >= 0 && p.gamma < 1, "ppo.gamma", "must be in [0,1)");
  req(p.lr > 0, "ppo.lr", "must be > 0");
  req(p.n_envs >= 1, "ppo.n_envs", "must be >= 1");
  req(p.rollout_steps >= 1, "ppo.rollout_steps", "must be >= 1");
  req(p.epochs >= 1, "ppo.epochs", "must be >= 1");
  req(p.minibatches >= 1, "ppo.minibatches", "must be >= 1");
  req((p.n_envs * p.rollout_steps) % p.minibatches == 0, "ppo.minibatches",
      "must divide n_envs * rollout_steps");
  req(p.entropy_coef >= 0, "ppo.entropy_coef", "must be >= 0");
  req(p.value_coef >= 0, "ppo.value_coef", "must be >= 0");
  req(p.target_kl >= 0, "ppo.target_kl", "must be >= 0");
  req(p.iterations >= 1, "ppo.iterations", "must be >= 1");
  req(p.checkpoint_every >= 1, "ppo.checkpoint_every", "must be >= 1");

  const auto& v = c.eval;
  req(v.n_robots >= 1, "eval.n_robots", "must be >= 1");
  req(v.n_seeds >= 1, "eval.n_seeds", "must be >= 1");
  req(v.tsne_perplexity > 1, "eval.tsne_perplexity", "must be > 1");
  req(v.tsne_iterations >= 1, "eval.tsne_iterations", "must be >= 1");
  req(v.tsne_exaggeration >= 1, "eval.tsne_exaggeration", "must be >= 1");
  req(v.tsne_exaggeration_iters >= 0 &&
          v.tsne_exaggeration_iters <= v.tsne_iterations,
      "eval.tsne_exaggeration_iters", "must be in [0, tsne_iterations]");
  req(v.tsne_learning_rate > 0, "eval.tsne_learning_rate", "must be > 0");
  req(!v.latent_kinds.empty(), "eval.latent_kinds", "must be non-empty");
  for (const auto& k : v.latent_kinds)
    req(k == "flat" || k == "rough" || k == "discrete" || k == "slope" ||
            k == "stairs",
        "eval.latent_kinds", "unknown terrain kind");
  req(v.latent_level >= 0 && v.latent_level <= 9, "eval.latent_level",
      "must be in [0,9]");
  req(v.latent_episodes >= 1, "eval.latent_episodes", "must be >= 1");
}

RunConfig parse_config_text(const std::string& text,
                            const std::vector<std::string>& overrides) {
  RunConfig cfg;
  apply_text(cfg, text);
  apply_overrides(cfg, overrides);
  validate_config(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), overrides);
}

std::string serialize_config(const RunConfig& cfg) {
  return serialize(cfg, false);
}

std::string serialize_config_annotated(const RunConfig& cfg) {
  return serialize(cfg, true);
}

std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string s = serialize_config(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace riser
