#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "riser/config.hpp"
#include "riser/env.hpp"
#include "riser/nets.hpp"
#include "riser/thread_pool.hpp"

namespace riser {

struct Checkpoint;

/// Actor, critic and context estimator wired per the run config.
///
/// Standard mode: the actor consumes [o_t, v_hat, z], the critic the
/// privileged state. Baseline mode: both consume the temporal observation
/// and no estimator exists.
struct PolicyNets {
  PolicyNets(const RunConfig& cfg, bool baseline);

  void init(Rng& rng);

  int actor_input_dim() const;
  int critic_input_dim() const;

  /// Actor input columns for a batch (gathers the right pieces per mode).
  Eigen::MatrixXd actor_input(const Eigen::MatrixXd& obs,
                              const Eigen::MatrixXd& obs_hist,
                              const Eigen::MatrixXd& v_hat,
                              const Eigen::MatrixXd& z) const;
  Eigen::MatrixXd critic_input(const Eigen::MatrixXd& priv,
                               const Eigen::MatrixXd& obs_hist) const;

  /// Deterministic action (mean; latent = mu) for one temporal observation.
  Eigen::Vector4d act_deterministic(const Eigen::VectorXd& obs_hist) const;
  /// The estimator latent (mu) in standard mode, or the actor's last hidden
  /// activation in baseline mode; the embedding-analysis feature.
  Eigen::VectorXd latent_feature(const Eigen::VectorXd& obs_hist) const;

  bool baseline = false;
  int obs_dim = 0;
  int obs_hist_dim = 0;
  int priv_dim = 0;
  int latent_dim = 0;
  static constexpr int kActionDim = 4;

  std::unique_ptr<Mlp> actor;
  std::unique_ptr<Mlp> critic;
  std::unique_ptr<CeNet> cenet;  // null in baseline mode
  Tensor log_std;

  std::vector<Tensor*> policy_tensors();  // actor + log_std + critic
  std::vector<Tensor*> cenet_tensors();
  std::vector<Tensor*> all_tensors();
};

/// Rectangular n_envs x rollout_steps storage; column index = t*n_envs + e.
struct RolloutBuffer {
  int n_envs = 0;
  int steps = 0;

  Eigen::MatrixXd obs;       // o_t
  Eigen::MatrixXd obs_hist;  // temporal observation
  Eigen::MatrixXd priv;      // privileged state
  Eigen::MatrixXd action;
  Eigen::MatrixXd v_hat;  // estimator outputs recorded at rollout time
  Eigen::MatrixXd z;
  Eigen::VectorXd logp;
  Eigen::VectorXd value;
  Eigen::VectorXd reward;
  Eigen::VectorXd done;  // 0/1
  Eigen::MatrixXd v_true;
  Eigen::MatrixXd obs_next;  // estimator reconstruction target
  Eigen::VectorXd bootstrap_value;  // per env, for the truncated tail
  Eigen::VectorXd advantage;
  Eigen::VectorXd returns;

  int size() const { return n_envs * steps; }
  int col(int t, int e) const { return t * n_envs + e; }
  void resize(int n_envs, int steps, int obs_dim, int obs_hist_dim,
              int priv_dim, int latent_dim);
};

/// GAE(lambda) with done-masking; advantages[t] accumulates
/// gamma*lambda-discounted TD residuals, returns = advantages + values.
void compute_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                 const Eigen::VectorXd& dones, double bootstrap_value,
                 double gamma, double lambda, Eigen::VectorXd& advantages,
                 Eigen::VectorXd& returns);

/// Buffer-wide GAE per environment plus optional batch normalization.
void compute_gae(RolloutBuffer& buf, double gamma, double lambda,
                 bool normalize);

/// One minibatch of recorded transitions, column-per-sample.
struct PolicyBatch {
  Eigen::MatrixXd obs, obs_hist, priv, action, v_hat, z;
  Eigen::VectorXd logp_old, advantage, returns;
  int size() const { return static_cast<int>(action.cols()); }
};

struct PolicyLossStats {
  double surrogate = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double total = 0.0;
};

/// Clipped-surrogate policy loss plus value regression on the batch:
///   -E[min(rho A, clip(rho, 1 +- eps) A)] - c_ent H + c_v E[(V - R)^2].
/// Recorded estimator outputs are actor inputs, so the ratio depends on
/// policy parameters alone. When accumulate_grads is set, gradients are
/// added into the network tensors. Throws on a non-finite loss.
PolicyLossStats policy_loss(PolicyNets& nets, const PpoConfig& cfg,
                            const PolicyBatch& batch, bool accumulate_grads);

struct UpdateStats {
  double surrogate_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double cenet_v_loss = 0.0;
  double cenet_rec_loss = 0.0;
  double cenet_kl = 0.0;
  double policy_grad_norm = 0.0;
  double cenet_grad_norm = 0.0;
};

struct IterStats {
  int iteration = 0;
  double step_reward_mean = 0.0;
  // Per-term step means (weighted values).
  double r_upright = 0.0, r_contact = 0.0, r_accel = 0.0, r_power = 0.0,
         r_action_rate = 0.0;
  int episodes_finished = 0;
  double episode_reward_mean = 0.0;
  double success_rate = 0.0;
  double mean_level = 0.0;
  UpdateStats update;
};

/// Vectorized PPO driver. Environments step in parallel on a fixed chunk
/// grid; every reduction runs in environment order, so results do not
/// depend on the worker count.
class Trainer {
 public:
  Trainer(const RunConfig& cfg, int n_threads);

  /// Fresh networks and environments from the config seed.
  void initialize();
  /// Restores networks, optimizer state, curriculum and streams.
  void restore(const Checkpoint& ck);

  IterStats run_iteration();

  /// Full loop: writes config.snapshot, metrics.csv and ckpt-<iter> files
  /// under out_dir. `stop` (optional) is polled after each iteration.
  void train(const std::string& out_dir,
             const std::function<bool(const IterStats&)>& stop = {});

  Checkpoint make_checkpoint() const;

  PolicyNets& nets() { return *nets_; }
  const RunConfig& config() const { return cfg_; }
  std::vector<std::unique_ptr<RecoveryEnv>>& envs() { return envs_; }
  int iteration() const { return iteration_; }

  /// Exposed for targeted tests.
  UpdateStats update(RolloutBuffer& buf);
  void collect_rollout(RolloutBuffer& buf, IterStats& stats);

 private:
  void forward_policy(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& obs_hist,
                      const Eigen::MatrixXd& priv, Eigen::MatrixXd& v_hat,
                      Eigen::MatrixXd& z, Eigen::MatrixXd& mean,
                      Eigen::VectorXd& value, bool sample_latent);

  RunConfig cfg_;
  ThreadPool pool_;
  std::unique_ptr<PolicyNets> nets_;
  std::unique_ptr<Adam> policy_adam_;
  std::unique_ptr<Adam> cenet_adam_;
  std::vector<std::unique_ptr<RecoveryEnv>> envs_;
  std::vector<Rng> act_rng_;  // per-env action/latent noise
  Rng update_rng_;            // minibatch permutations, update-time latents
  int iteration_ = 0;
  bool envs_need_reset_ = true;

  // Per-env scratch kept across steps within an iteration.
  Eigen::MatrixXd cur_obs_, cur_obs_hist_, cur_priv_;
};

}  // namespace riser
