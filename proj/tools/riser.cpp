#include <CLI11.hpp>
#include <unistd.h>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "riser/checkpoint.hpp"
#include "riser/config.hpp"
#include "riser/eval.hpp"
#include "riser/io_util.hpp"
#include "riser/ppo.hpp"
#include "riser/terrain.hpp"
#include "riser/thread_pool.hpp"

namespace fs = std::filesystem;
using namespace riser;

namespace {

/// Exclusive ownership of a run directory for the process lifetime.
class RunLock {
 public:
  explicit RunLock(const std::string& dir) : path_(dir + "/.lock") {
    fs::create_directories(dir);
    std::ifstream probe(path_);
    if (probe.good())
      throw std::runtime_error("run directory is locked by " + path_ +
                               " (remove it if no run is active)");
    std::ofstream out(path_);
    out << "riser pid " << ::getpid() << "\n";
  }
  ~RunLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }

 private:
  std::string path_;
};

RunConfig config_for(const std::string& config_path,
                     const std::string& ckpt_path,
                     const std::vector<std::string>& overrides) {
  if (!config_path.empty()) return load_config(config_path, overrides);
  if (!ckpt_path.empty()) {
    const fs::path sibling =
        fs::path(ckpt_path).parent_path() / "config.snapshot";
    if (fs::exists(sibling)) return load_config(sibling.string(), overrides);
  }
  RunConfig cfg = parse_config_text("", overrides);
  return cfg;
}

std::string hash_hex(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> levels;
  const size_t dots = text.find("..");
  if (dots != std::string::npos) {
    const int lo = std::stoi(text.substr(0, dots));
    const int hi = std::stoi(text.substr(dots + 2));
    for (int l = lo; l <= hi; ++l) levels.push_back(l);
  } else {
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) levels.push_back(std::stoi(item));
  }
  if (levels.empty()) throw std::runtime_error("no levels given");
  return levels;
}

int cmd_terrain(const std::string& kind, int level, std::uint64_t seed,
                const std::string& out, const std::string& config_path,
                const std::vector<std::string>& overrides) {
  const RunConfig cfg = config_for(config_path, "", overrides);
  TerrainSpec spec;
  spec.kind = terrain_kind_from_string(kind);
  spec.level = level;
  spec.seed = seed;
  spec.extent = cfg.terrain.extent;
  spec.cell_size = cfg.terrain.cell_size;
  save_heightfield(generate_terrain(spec, cfg.terrain), out);
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& out,
              bool baseline, bool resume,
              const std::vector<std::string>& overrides) {
  std::vector<std::string> ovs = overrides;
  if (baseline) ovs.push_back("ppo.baseline_mode=true");
  const RunConfig cfg = config_for(config_path, "", ovs);
  RunLock lock(out);
  Trainer trainer(cfg, ThreadPool::env_thread_count());
  if (resume) {
    const Checkpoint ck =
        Checkpoint::load(out + "/ckpt-latest", config_hash(cfg), false);
    trainer.restore(ck);
  } else {
    trainer.initialize();
  }
  trainer.train(out);
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& kind,
             const std::string& levels_text, int robots, int seeds,
             const std::string& out, const std::string& config_path,
             bool allow_mismatch, const std::vector<std::string>& overrides) {
  const RunConfig cfg = config_for(config_path, ckpt, overrides);
  const Checkpoint ck =
      Checkpoint::load(ckpt, config_hash(cfg), allow_mismatch);
  const PolicyRuntime policy(cfg, ck);
  ThreadPool pool(ThreadPool::env_thread_count());
  const std::vector<int> levels = parse_levels(levels_text);

  std::ostringstream csv;
  csv << "# config_hash " << hash_hex(config_hash(cfg)) << "\n";
  csv << "kind,level,seed,success_rate\n";
  for (int level : levels) {
    const SuccessStats stats =
        run_success_trials(cfg, policy, terrain_kind_from_string(kind), level,
                           robots, seeds, &pool);
    for (int s = 0; s < seeds; ++s)
      csv << kind << "," << level << "," << s << ","
          << format_double(stats.per_seed[s]) << "\n";
    std::fprintf(stderr, "%s level %d: success %.3f +- %.3f\n", kind.c_str(),
                 level, stats.mean, stats.stddev);
  }
  atomic_write_file(out, csv.str());
  return 0;
}

int cmd_latents(const std::string& ckpt, const std::string& out,
                const std::string& config_path, bool allow_mismatch,
                const std::vector<std::string>& overrides) {
  const RunConfig cfg = config_for(config_path, ckpt, overrides);
  const Checkpoint ck =
      Checkpoint::load(ckpt, config_hash(cfg), allow_mismatch);
  const PolicyRuntime policy(cfg, ck);
  std::vector<LatentScenario> scenarios;
  for (const std::string& k : cfg.eval.latent_kinds)
    scenarios.push_back({terrain_kind_from_string(k), cfg.eval.latent_level,
                         cfg.eval.latent_episodes});
  const auto records = record_latents(cfg, policy, scenarios);
  save_latents_csv(records, out, config_hash(cfg));
  std::fprintf(stderr, "recorded %zu latent rows\n", records.size());
  return 0;
}

int cmd_tsne(const std::string& in, double perplexity, int iterations,
             std::uint64_t seed, const std::string& out) {
  const LatentCsv csv = load_latents_csv(in);
  TsneOptions opts;
  opts.perplexity = perplexity;
  opts.iterations = iterations;
  opts.seed = seed;
  const TsneResult res = tsne_embed(csv.z, opts);
  std::ostringstream o;
  o << "# config_hash " << hash_hex(csv.config_hash) << "\n";
  o << "x,y,kind,level,tick\n";
  for (Eigen::Index i = 0; i < res.points.rows(); ++i)
    o << format_double(res.points(i, 0)) << ","
      << format_double(res.points(i, 1)) << "," << csv.kinds[i] << ","
      << csv.levels[i] << "," << csv.ticks[i] << "\n";
  atomic_write_file(out, o.str());
  if (!res.kl_trace.empty())
    std::fprintf(stderr, "tsne final KL %.6f\n", res.kl_trace.back());
  return 0;
}

int cmd_replay(const std::string& ckpt, std::uint64_t seed,
               const std::string& kind, int level, const std::string& out,
               const std::string& config_path, bool allow_mismatch,
               const std::vector<std::string>& overrides) {
  const RunConfig cfg = config_for(config_path, ckpt, overrides);
  const Checkpoint ck =
      Checkpoint::load(ckpt, config_hash(cfg), allow_mismatch);
  const PolicyRuntime policy(cfg, ck);

  RecoveryEnv env(cfg, terrain_kind_from_string(kind), 0);
  env.reset(level, seed);
  std::ostringstream trace;
  trace << "# riser-trace v1 config_hash " << hash_hex(config_hash(cfg))
        << "\n";
  trace << "# columns: t x z roll vx vz omega q0..q3 dq0..dq3 tau0..tau3 "
           "cL cR r_upright r_contact r_accel r_power r_rate r_total\n";
  auto emit = [&](double t, const RobotState& s, const RewardBreakdown& rb) {
    trace << format_double(t) << " " << format_double(s.x) << " "
          << format_double(s.z) << " " << format_double(s.roll) << " "
          << format_double(s.vx) << " " << format_double(s.vz) << " "
          << format_double(s.omega);
    for (double v : s.q) trace << " " << format_double(v);
    for (double v : s.dq) trace << " " << format_double(v);
    for (double v : s.tau) trace << " " << format_double(v);
    trace << " " << (s.foot_contact[0] ? 1 : 0) << " "
          << (s.foot_contact[1] ? 1 : 0);
    for (double v : {rb.uprightness.weighted, rb.foot_contact.weighted,
                     rb.joint_accel.weighted, rb.joint_power.weighted,
                     rb.action_rate.weighted, rb.total})
      trace << " " << format_double(v);
    trace << "\n";
  };
  emit(0.0, env.sim().state(), RewardBreakdown{});
  for (int t = 0; t < cfg.episode_steps(); ++t) {
    const StepResult r = env.step(policy.act(env.temporal()));
    emit((t + 1) / cfg.env.control_hz, env.sim().state(), r.reward);
    if (r.done) break;
  }
  atomic_write_file(out, trace.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"riser: planar quadruped recovery-policy training and "
               "evaluation"};
  app.require_subcommand(1);

  std::string config_path, out, ckpt, kind = "flat", levels = "0..9", in;
  std::uint64_t seed = 0;
  int level = 0, robots = 1000, seeds = 10, iterations = 1000;
  double perplexity = 30.0;
  bool baseline = false, resume = false, allow_mismatch = false;
  std::vector<std::string> overrides;

  auto add_overrides = [&](CLI::App* cmd) {
    cmd->add_option("--override", overrides,
                    "config override key=value (repeatable)");
    cmd->add_option("--config", config_path, "config file path");
  };

  auto* t = app.add_subcommand("terrain", "generate a terrain file");
  t->add_option("--kind", kind)->required();
  t->add_option("--level", level)->required();
  t->add_option("--seed", seed)->required();
  t->add_option("--out", out)->required();
  add_overrides(t);

  auto* tr = app.add_subcommand("train", "train a recovery policy");
  tr->add_option("--out", out)->required();
  tr->add_flag("--baseline", baseline, "no estimator, symmetric critic");
  tr->add_flag("--resume", resume, "resume from ckpt-latest in --out");
  add_overrides(tr);

  auto* ev = app.add_subcommand("eval", "success-rate benchmark");
  ev->add_option("--ckpt", ckpt)->required();
  ev->add_option("--kind", kind)->required();
  ev->add_option("--levels", levels, "e.g. 0..9 or 2 or 1,3,5");
  ev->add_option("--robots", robots);
  ev->add_option("--seeds", seeds);
  ev->add_option("--out", out)->required();
  ev->add_flag("--allow-config-mismatch", allow_mismatch);
  add_overrides(ev);

  auto* la = app.add_subcommand("latents", "record estimator latents");
  la->add_option("--ckpt", ckpt)->required();
  la->add_option("--out", out)->required();
  la->add_flag("--allow-config-mismatch", allow_mismatch);
  add_overrides(la);

  auto* ts = app.add_subcommand("tsne", "embed recorded latents in 2-D");
  ts->add_option("--in", in)->required();
  ts->add_option("--perplexity", perplexity);
  ts->add_option("--iterations", iterations);
  ts->add_option("--seed", seed);
  ts->add_option("--out", out)->required();

  auto* rp = app.add_subcommand("replay", "re-simulate one episode");
  rp->add_option("--ckpt", ckpt)->required();
  rp->add_option("--seed", seed)->required();
  rp->add_option("--kind", kind);
  rp->add_option("--level", level);
  rp->add_option("--out", out)->required();
  rp->add_flag("--allow-config-mismatch", allow_mismatch);
  add_overrides(rp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (t->parsed())
      return cmd_terrain(kind, level, seed, out, config_path, overrides);
    if (tr->parsed())
      return cmd_train(config_path, out, baseline, resume, overrides);
    if (ev->parsed())
      return cmd_eval(ckpt, kind, levels, robots, seeds, out, config_path,
                      allow_mismatch, overrides);
    if (la->parsed())
      return cmd_latents(ckpt, out, config_path, allow_mismatch, overrides);
    if (ts->parsed())
      return cmd_tsne(in, perplexity, iterations, seed, out);
    if (rp->parsed())
      return cmd_replay(ckpt, seed, kind, level, out, config_path,
                        allow_mismatch, overrides);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
