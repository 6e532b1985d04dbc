#include "riser/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "riser/io_util.hpp"

namespace riser {

PolicyRuntime::PolicyRuntime(const RunConfig& cfg, const Checkpoint& ck) {
  nets_ = std::make_unique<PolicyNets>(cfg, ck.baseline_mode);
  for (Tensor* t : nets_->all_tensors()) {
    const NamedTensor* src = ck.find(t->name);
    if (!src)
      throw std::runtime_error("checkpoint: missing tensor " + t->name);
    if (src->value.rows() != t->value.rows() ||
        src->value.cols() != t->value.cols())
      throw std::runtime_error("checkpoint: shape mismatch for " + t->name);
    t->value = src->value;
  }
}

EpisodeResult run_episode(const RunConfig& cfg, TerrainKind kind, int level,
                          std::uint64_t episode_seed,
                          const TrialPolicy& policy) {
  RecoveryEnv env(cfg, kind, /*env_index=*/0);
  env.reset(level, episode_seed);
  EpisodeResult res;
  res.kind = kind;
  res.level = level;
  res.seed = episode_seed;
  bool blown_up = false;
  for (int t = 0; t < cfg.episode_steps(); ++t) {
    const Eigen::Vector4d a = policy(env.temporal(), env);
    const StepResult r = env.step(a);
    blown_up = blown_up || r.blown_up;
    if (r.done) break;
  }
  res.time_to_recover = env.time_to_recover();
  res.recovered = res.time_to_recover.has_value() &&
                  *res.time_to_recover <= cfg.env.episode_seconds;
  if (!res.recovered) res.failure = blown_up ? "diverged" : "not_recovered";
  return res;
}

SuccessStats run_success_trials(const RunConfig& cfg,
                                const TrialPolicy& policy, TerrainKind kind,
                                int level, int n_robots, int n_seeds,
                                ThreadPool* pool) {
  // Benchmark protocol: robots are dropped and must recover unaided, so
  // the training-time random pushes are off during trials.
  RunConfig trial_cfg = cfg;
  trial_cfg.sim.disturb_prob = 0.0;
  const int n_trials = n_robots * n_seeds;
  std::vector<char> recovered(n_trials, 0);

  auto run_range = [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      const int seed_idx = i / n_robots;
      const int robot_idx = i % n_robots;
      const std::uint64_t episode_seed =
          mix_seed({cfg.seed, 0x6576616c, static_cast<std::uint64_t>(kind),
                    std::uint64_t(level), std::uint64_t(seed_idx),
                    std::uint64_t(robot_idx)});
      recovered[i] =
          run_episode(trial_cfg, kind, level, episode_seed, policy).recovered
              ? 1
              : 0;
    }
  };

  if (pool) {
    const int chunks = std::min(64, n_trials);
    pool->run_chunks(chunks, [&](int c) {
      run_range(c * n_trials / chunks, (c + 1) * n_trials / chunks);
    });
  } else {
    run_range(0, n_trials);
  }

  SuccessStats stats;
  stats.per_seed.resize(n_seeds, 0.0);
  for (int i = 0; i < n_trials; ++i)
    stats.per_seed[i / n_robots] += recovered[i] ? 1.0 : 0.0;
  for (double& f : stats.per_seed) f /= n_robots;
  for (double f : stats.per_seed) stats.mean += f;
  stats.mean /= n_seeds;
  if (n_seeds > 1) {
    double ss = 0.0;
    for (double f : stats.per_seed) ss += (f - stats.mean) * (f - stats.mean);
    stats.stddev = std::sqrt(ss / (n_seeds - 1));
  }
  return stats;
}

SuccessStats run_success_trials(const RunConfig& cfg,
                                const PolicyRuntime& policy, TerrainKind kind,
                                int level, int n_robots, int n_seeds,
                                ThreadPool* pool) {
  TrialPolicy fn = [&policy](const Eigen::VectorXd& obs_hist, RecoveryEnv&) {
    return policy.act(obs_hist);
  };
  return run_success_trials(cfg, fn, kind, level, n_robots, n_seeds, pool);
}

std::vector<LatentRecord> record_latents(
    const RunConfig& cfg, const PolicyRuntime& policy,
    const std::vector<LatentScenario>& scenarios) {
  RunConfig trial_cfg = cfg;
  trial_cfg.sim.disturb_prob = 0.0;  // same convention as success trials
  std::vector<LatentRecord> records;
  for (const LatentScenario& sc : scenarios) {
    for (int ep = 0; ep < sc.episodes; ++ep) {
      RecoveryEnv env(trial_cfg, sc.kind, 0);
      env.reset(sc.level,
                mix_seed({cfg.seed, 0x6c6174, static_cast<std::uint64_t>(sc.kind),
                          std::uint64_t(sc.level), std::uint64_t(ep)}));
      for (int t = 0; t < trial_cfg.episode_steps(); ++t) {
        LatentRecord rec;
        rec.z = policy.latent(env.temporal());
        rec.kind = sc.kind;
        rec.level = sc.level;
        rec.tick = t;
        records.push_back(std::move(rec));
        const StepResult r = env.step(policy.act(env.temporal()));
        if (r.done) break;
      }
    }
  }
  return records;
}

void save_latents_csv(const std::vector<LatentRecord>& records,
                      const std::string& path, std::uint64_t config_hash) {
  if (records.empty()) throw std::invalid_argument("no latent records");
  std::ostringstream out;
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(config_hash));
  out << "# config_hash " << hex << "\n";
  out << "kind,level,tick";
  for (Eigen::Index d = 0; d < records[0].z.size(); ++d) out << ",z" << d;
  out << "\n";
  for (const auto& r : records) {
    out << to_string(r.kind) << "," << r.level << "," << r.tick;
    for (Eigen::Index d = 0; d < r.z.size(); ++d)
      out << "," << format_double(r.z(d));
    out << "\n";
  }
  atomic_write_file(path, out.str());
}

LatentCsv load_latents_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  LatentCsv csv;
  std::string line;
  std::vector<std::vector<double>> rows;
  int dim = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string tag, hex;
      hs >> tag >> hex;
      if (tag == "config_hash")
        csv.config_hash = std::stoull(hex, nullptr, 16);
      continue;
    }
    if (line.rfind("kind,", 0) == 0) continue;  // header
    std::istringstream ls(line);
    std::string field;
    std::getline(ls, field, ',');
    csv.kinds.push_back(field);
    std::getline(ls, field, ',');
    csv.levels.push_back(std::stoi(field));
    std::getline(ls, field, ',');
    csv.ticks.push_back(std::stoi(field));
    std::vector<double> z;
    while (std::getline(ls, field, ',')) z.push_back(std::stod(field));
    if (dim < 0) dim = static_cast<int>(z.size());
    if (static_cast<int>(z.size()) != dim)
      throw std::runtime_error("latents csv: ragged rows");
    rows.push_back(std::move(z));
  }
  if (rows.empty()) throw std::runtime_error("latents csv: no data rows");
  csv.z.resize(static_cast<Eigen::Index>(rows.size()), dim);
  for (size_t i = 0; i < rows.size(); ++i)
    for (int d = 0; d < dim; ++d) csv.z(static_cast<Eigen::Index>(i), d) = rows[i][d];
  return csv;
}

double cluster_separation_score(const Eigen::MatrixXd& points,
                                const std::vector<int>& labels) {
  const Eigen::Index n = points.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw std::invalid_argument("labels size must match point count");
  std::vector<int> uniq(labels);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  if (uniq.size() < 2)
    throw std::invalid_argument(
        "cluster_separation_score: need at least two labels");
  std::vector<int> counts(uniq.size(), 0);
  auto label_index = [&](int lab) {
    return static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), lab) -
                            uniq.begin());
  };
  for (int lab : labels) ++counts[label_index(lab)];
  for (int c : counts)
    if (c < 2)
      throw std::invalid_argument(
          "cluster_separation_score: every label needs at least two points");

  const int k = static_cast<int>(uniq.size());
  double total = 0.0;
  std::vector<double> sum_d(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::fill(sum_d.begin(), sum_d.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      sum_d[label_index(labels[j])] += (points.row(i) - points.row(j)).norm();
    }
    const int li = label_index(labels[i]);
    const double a = sum_d[li] / (counts[li] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c)
      if (c != li) b = std::min(b, sum_d[c] / counts[c]);
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / double(n);
}

}  // namespace riser
