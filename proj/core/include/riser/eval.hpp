#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "riser/checkpoint.hpp"
#include "riser/config.hpp"
#include "riser/env.hpp"
#include "riser/ppo.hpp"
#include "riser/thread_pool.hpp"

namespace riser {

struct EpisodeResult {
  TerrainKind kind = TerrainKind::Flat;
  int level = 0;
  std::uint64_t seed = 0;
  bool recovered = false;
  std::optional<double> time_to_recover;
  std::string failure;  // empty when recovered
};

struct SuccessStats {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> per_seed;
};

/// Inference-only wrapper around a checkpoint: deterministic actions
/// (Gaussian mean, latent = mu) and the embedding-analysis feature.
class PolicyRuntime {
 public:
  PolicyRuntime(const RunConfig& cfg, const Checkpoint& ck);

  Eigen::Vector4d act(const Eigen::VectorXd& obs_hist) const {
    return nets_->act_deterministic(obs_hist);
  }
  Eigen::VectorXd latent(const Eigen::VectorXd& obs_hist) const {
    return nets_->latent_feature(obs_hist);
  }
  bool baseline() const { return nets_->baseline; }
  const PolicyNets& nets() const { return *nets_; }

 private:
  std::unique_ptr<PolicyNets> nets_;
};

/// Per-tick controller; tests may reach into the environment.
using TrialPolicy =
    std::function<Eigen::Vector4d(const Eigen::VectorXd& obs_hist,
                                  RecoveryEnv& env)>;

EpisodeResult run_episode(const RunConfig& cfg, TerrainKind kind, int level,
                          std::uint64_t episode_seed,
                          const TrialPolicy& policy);

/// n_robots trials per seed; per-seed success fractions, mean and standard
/// deviation across seeds. Per-trial seeds are fixed up front, so results
/// are independent of execution order and worker count.
SuccessStats run_success_trials(const RunConfig& cfg, const TrialPolicy& policy,
                                TerrainKind kind, int level, int n_robots,
                                int n_seeds, ThreadPool* pool = nullptr);
SuccessStats run_success_trials(const RunConfig& cfg,
                                const PolicyRuntime& policy, TerrainKind kind,
                                int level, int n_robots, int n_seeds,
                                ThreadPool* pool = nullptr);

struct LatentRecord {
  Eigen::VectorXd z;
  TerrainKind kind = TerrainKind::Flat;
  int level = 0;
  int tick = 0;
};

struct LatentScenario {
  TerrainKind kind = TerrainKind::Flat;
  int level = 0;
  int episodes = 1;
};

/// Runs deterministic episodes per scenario, recording the latent feature
/// at every control tick with the scenario label.
std::vector<LatentRecord> record_latents(
    const RunConfig& cfg, const PolicyRuntime& policy,
    const std::vector<LatentScenario>& scenarios);

void save_latents_csv(const std::vector<LatentRecord>& records,
                      const std::string& path, std::uint64_t config_hash);
struct LatentCsv {
  Eigen::MatrixXd z;  // n x d, row per record
  std::vector<std::string> kinds;
  std::vector<int> levels;
  std::vector<int> ticks;
  std::uint64_t config_hash = 0;
};
LatentCsv load_latents_csv(const std::string& path);

struct TsneOptions {
  double perplexity = 30.0;
  int iterations = 1000;
  double exaggeration = 12.0;
  int exaggeration_iters = 250;
  double learning_rate = 200.0;
  std::uint64_t seed = 0;
};

struct TsneResult {
  Eigen::MatrixXd points;  // n x 2
  std::vector<double> kl_trace;
  bool degenerate = false;
};

/// Exact O(n^2) t-SNE: perplexity-calibrated Gaussian input affinities,
/// Student-t output kernel, gradient descent with early exaggeration and a
/// 0.5 -> 0.8 momentum switch. Inputs are rows of `data`.
TsneResult tsne_embed(const Eigen::MatrixXd& data, const TsneOptions& opts);

/// Row-normalized conditional input affinities (diagnostics/tests).
Eigen::MatrixXd tsne_input_affinities(const Eigen::MatrixXd& data,
                                      double perplexity);

/// Mean silhouette coefficient with Euclidean distance, in [-1, 1].
double cluster_separation_score(const Eigen::MatrixXd& points,
                                const std::vector<int>& labels);

}  // namespace riser
