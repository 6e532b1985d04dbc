#include "riser/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "riser/checkpoint.hpp"
#include "riser/io_util.hpp"

namespace riser {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr int kEnvChunks = 16;  // fixed grid; results independent of workers
}  // namespace

PolicyNets::PolicyNets(const RunConfig& cfg, bool baseline_mode)
    : baseline(baseline_mode),
      obs_dim(Observation::kDim),
      obs_hist_dim(Observation::kDim * (cfg.env.history_len + 1)),
      priv_dim(PrivilegedState::dim(cfg)),
      latent_dim(cfg.nets.latent_dim),
      log_std("policy.log_std", kActionDim, 1) {
  actor = std::make_unique<Mlp>("actor", actor_input_dim(),
                                cfg.nets.actor_hidden, kActionDim);
  critic = std::make_unique<Mlp>("critic", critic_input_dim(),
                                 cfg.nets.critic_hidden, 1);
  if (!baseline)
    cenet = std::make_unique<CeNet>(obs_hist_dim, cfg.nets.cenet_hidden,
                                    latent_dim, cfg.nets.decoder_hidden,
                                    obs_dim);
  log_std.value.setConstant(cfg.nets.logstd_init);
}

int PolicyNets::actor_input_dim() const {
  return baseline ? obs_hist_dim : obs_dim + 2 + latent_dim;
}

int PolicyNets::critic_input_dim() const {
  return baseline ? obs_hist_dim : priv_dim;
}

void PolicyNets::init(Rng& rng) {
  actor->init(rng);
  actor->scale_output_layer(0.1);
  critic->init(rng);
  if (cenet) cenet->init(rng);
}

Eigen::MatrixXd PolicyNets::actor_input(const Eigen::MatrixXd& obs,
                                        const Eigen::MatrixXd& obs_hist,
                                        const Eigen::MatrixXd& v_hat,
                                        const Eigen::MatrixXd& z) const {
  if (baseline) return obs_hist;
  Eigen::MatrixXd in(obs_dim + 2 + latent_dim, obs.cols());
  in.topRows(obs_dim) = obs;
  in.middleRows(obs_dim, 2) = v_hat;
  in.bottomRows(latent_dim) = z;
  return in;
}

Eigen::MatrixXd PolicyNets::critic_input(const Eigen::MatrixXd& priv,
                                         const Eigen::MatrixXd& obs_hist) const {
  return baseline ? obs_hist : priv;
}

Eigen::Vector4d PolicyNets::act_deterministic(
    const Eigen::VectorXd& obs_hist) const {
  if (baseline) return actor->forward(obs_hist);
  CeNet::Forward f;
  cenet->encode(obs_hist, f, /*sample=*/false, nullptr);
  Eigen::MatrixXd in = actor_input(obs_hist.head(obs_dim), obs_hist, f.v_hat,
                                   f.z);
  return actor->forward(in);
}

Eigen::VectorXd PolicyNets::latent_feature(
    const Eigen::VectorXd& obs_hist) const {
  if (!baseline) {
    CeNet::Forward f;
    cenet->encode(obs_hist, f, /*sample=*/false, nullptr);
    return f.mu.col(0);
  }
  Mlp::Cache cache;
  actor->forward(obs_hist, cache);
  return actor->last_hidden(cache).col(0);
}

std::vector<Tensor*> PolicyNets::policy_tensors() {
  std::vector<Tensor*> out = actor->tensors();
  out.push_back(&log_std);
  for (Tensor* t : critic->tensors()) out.push_back(t);
  return out;
}

std::vector<Tensor*> PolicyNets::cenet_tensors() {
  return cenet ? cenet->tensors() : std::vector<Tensor*>{};
}

std::vector<Tensor*> PolicyNets::all_tensors() {
  std::vector<Tensor*> out = policy_tensors();
  for (Tensor* t : cenet_tensors()) out.push_back(t);
  return out;
}

void RolloutBuffer::resize(int envs, int n_steps, int obs_dim,
                           int obs_hist_dim, int priv_dim, int latent_dim) {
  n_envs = envs;
  steps = n_steps;
  const int m = size();
  obs.resize(obs_dim, m);
  obs_hist.resize(obs_hist_dim, m);
  priv.resize(priv_dim, m);
  action.resize(4, m);
  v_hat.setZero(2, m);
  z.setZero(latent_dim, m);
  logp.resize(m);
  value.resize(m);
  reward.resize(m);
  done.resize(m);
  v_true.resize(2, m);
  obs_next.resize(obs_dim, m);
  bootstrap_value.setZero(envs);
  advantage.resize(m);
  returns.resize(m);
}

void compute_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                 const Eigen::VectorXd& dones, double bootstrap_value,
                 double gamma, double lambda, Eigen::VectorXd& advantages,
                 Eigen::VectorXd& returns) {
  const Eigen::Index T = rewards.size();
  advantages.resize(T);
  returns.resize(T);
  double gae = 0.0;
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const double nonterminal = 1.0 - dones(t);
    const double next_value = (t == T - 1) ? bootstrap_value : values(t + 1);
    const double delta =
        rewards(t) + gamma * next_value * nonterminal - values(t);
    gae = delta + gamma * lambda * nonterminal * gae;
    advantages(t) = gae;
    returns(t) = gae + values(t);
  }
}

void compute_gae(RolloutBuffer& buf, double gamma, double lambda,
                 bool normalize) {
  Eigen::VectorXd r(buf.steps), v(buf.steps), d(buf.steps), adv, ret;
  for (int e = 0; e < buf.n_envs; ++e) {
    for (int t = 0; t < buf.steps; ++t) {
      const int c = buf.col(t, e);
      r(t) = buf.reward(c);
      v(t) = buf.value(c);
      d(t) = buf.done(c);
    }
    compute_gae(r, v, d, buf.bootstrap_value(e), gamma, lambda, adv, ret);
    for (int t = 0; t < buf.steps; ++t) {
      const int c = buf.col(t, e);
      buf.advantage(c) = adv(t);
      buf.returns(c) = ret(t);
    }
  }
  if (normalize) {
    const double mean = buf.advantage.mean();
    const double var =
        (buf.advantage.array() - mean).square().sum() / buf.advantage.size();
    const double stddev = std::sqrt(var);
    buf.advantage = (buf.advantage.array() - mean) / (stddev + 1e-8);
  }
}

Trainer::Trainer(const RunConfig& cfg, int n_threads)
    : cfg_(cfg), pool_(n_threads) {}

void Trainer::initialize() {
  nets_ = std::make_unique<PolicyNets>(cfg_, cfg_.ppo.baseline_mode);
  Rng net_rng(mix_seed({cfg_.seed, 0x6e657473}));
  nets_->init(net_rng);
  policy_adam_ = std::make_unique<Adam>(nets_->policy_tensors(), cfg_.ppo.lr,
                                        cfg_.nets.adam_beta1,
                                        cfg_.nets.adam_beta2,
                                        cfg_.nets.adam_eps);
  if (nets_->cenet)
    cenet_adam_ = std::make_unique<Adam>(nets_->cenet_tensors(), cfg_.ppo.lr,
                                         cfg_.nets.adam_beta1,
                                         cfg_.nets.adam_beta2,
                                         cfg_.nets.adam_eps);

  const auto& kinds = cfg_.env.terrain_kinds;
  envs_.clear();
  act_rng_.clear();
  for (int e = 0; e < cfg_.ppo.n_envs; ++e) {
    const TerrainKind kind =
        terrain_kind_from_string(kinds[e % kinds.size()]);
    envs_.push_back(std::make_unique<RecoveryEnv>(cfg_, kind, e));
    // Spread starting difficulties so every allowed level stays in the
    // training distribution while promotion windows fill.
    envs_.back()->set_level((e / int(kinds.size())) %
                            (cfg_.env.max_level + 1));
    act_rng_.emplace_back(mix_seed({cfg_.seed, 0x616374, std::uint64_t(e)}));
  }
  update_rng_ = Rng(mix_seed({cfg_.seed, 0x757064}));
  iteration_ = 0;

  cur_obs_.resize(nets_->obs_dim, cfg_.ppo.n_envs);
  cur_obs_hist_.resize(nets_->obs_hist_dim, cfg_.ppo.n_envs);
  cur_priv_.resize(nets_->priv_dim, cfg_.ppo.n_envs);
  envs_need_reset_ = true;
}

void Trainer::forward_policy(const Eigen::MatrixXd& obs,
                             const Eigen::MatrixXd& obs_hist,
                             const Eigen::MatrixXd& priv,
                             Eigen::MatrixXd& v_hat, Eigen::MatrixXd& z,
                             Eigen::MatrixXd& mean, Eigen::VectorXd& value,
                             bool sample_latent) {
  const int n = static_cast<int>(obs.cols());
  if (nets_->cenet) {
    CeNet::Forward f;
    if (sample_latent) {
      Eigen::MatrixXd eps(nets_->latent_dim, n);
      for (int e = 0; e < n; ++e)
        for (int i = 0; i < nets_->latent_dim; ++i)
          eps(i, e) = act_rng_[e].normal();
      nets_->cenet->encode_with_eps(obs_hist, f, eps);
    } else {
      nets_->cenet->encode(obs_hist, f, false, nullptr);
    }
    v_hat = f.v_hat;
    z = f.z;
  } else {
    v_hat.setZero(2, n);
    z.setZero(nets_->latent_dim, n);
  }
  mean = nets_->actor->forward(nets_->actor_input(obs, obs_hist, v_hat, z));
  value = nets_->critic->forward(nets_->critic_input(priv, obs_hist))
              .transpose();
}

void Trainer::collect_rollout(RolloutBuffer& buf, IterStats& stats) {
  const int n_envs = cfg_.ppo.n_envs;
  const int steps = cfg_.ppo.rollout_steps;
  buf.resize(n_envs, steps, nets_->obs_dim, nets_->obs_hist_dim,
             nets_->priv_dim, nets_->latent_dim);

  // First rollout after initialize/restore starts fresh episodes here, so
  // checkpoints taken between iterations round-trip exactly.
  if (envs_need_reset_) {
    for (int e = 0; e < n_envs; ++e) {
      auto [obs, priv] = envs_[e]->reset_auto();
      cur_obs_.col(e) = obs.to_vector();
      cur_obs_hist_.col(e) = envs_[e]->temporal();
      cur_priv_.col(e) = priv.data;
    }
    envs_need_reset_ = false;
  }

  const Eigen::Array4d sigma = nets_->log_std.value.col(0).array().exp();
  const double log_std_sum = nets_->log_std.value.col(0).sum();

  struct EpisodeEnd {
    double reward;
    bool success;
  };
  std::vector<std::vector<EpisodeEnd>> episode_ends(n_envs);
  std::vector<StepResult> results(n_envs);

  Eigen::MatrixXd v_hat, z, mean;
  Eigen::VectorXd value;
  for (int t = 0; t < steps; ++t) {
    forward_policy(cur_obs_, cur_obs_hist_, cur_priv_, v_hat, z, mean, value,
                   /*sample_latent=*/true);

    // Sample actions env-by-env so draw order never depends on workers.
    Eigen::MatrixXd actions(4, n_envs);
    Eigen::VectorXd logp(n_envs);
    for (int e = 0; e < n_envs; ++e) {
      Eigen::Array4d eps;
      for (int i = 0; i < 4; ++i) eps(i) = act_rng_[e].normal();
      const Eigen::Array4d a = mean.col(e).array() + sigma * eps;
      actions.col(e) = a.matrix();
      const Eigen::Array4d zscore = (a - mean.col(e).array()) / sigma;
      logp(e) = -0.5 * zscore.square().sum() - log_std_sum - 2.0 * kLog2Pi;
    }

    for (int e = 0; e < n_envs; ++e) {
      const int c = buf.col(t, e);
      buf.obs.col(c) = cur_obs_.col(e);
      buf.obs_hist.col(c) = cur_obs_hist_.col(e);
      buf.priv.col(c) = cur_priv_.col(e);
      buf.action.col(c) = actions.col(e);
      if (nets_->cenet) {
        buf.v_hat.col(c) = v_hat.col(e);
        buf.z.col(c) = z.col(e);
      }
      buf.logp(c) = logp(e);
      buf.value(c) = value(e);
    }

    const int chunks = std::min(kEnvChunks, n_envs);
    pool_.run_chunks(chunks, [&](int chunk) {
      const int lo = chunk * n_envs / chunks;
      const int hi = (chunk + 1) * n_envs / chunks;
      for (int e = lo; e < hi; ++e) {
        StepResult r = envs_[e]->step(actions.col(e));
        const int c = buf.col(t, e);
        buf.reward(c) = r.reward.total;
        buf.done(c) = r.done ? 1.0 : 0.0;
        buf.v_true.col(c) = r.base_velocity;
        // A blown-up step can leave non-finite observations; fall back to
        // the pre-step frame as the reconstruction target.
        buf.obs_next.col(c) =
            r.blown_up ? cur_obs_.col(e) : r.obs.to_vector();
        if (r.done) {
          const double ep_reward = envs_[e]->episode_reward();
          envs_[e]->finish_episode(r.recovered_ever);
          episode_ends[e].push_back({ep_reward, r.recovered_ever});
          auto [obs2, priv2] = envs_[e]->reset_auto();
          cur_obs_.col(e) = obs2.to_vector();
          cur_priv_.col(e) = priv2.data;
        } else {
          cur_obs_.col(e) = r.obs.to_vector();
          cur_priv_.col(e) = r.priv.data;
        }
        cur_obs_hist_.col(e) = envs_[e]->temporal();
        results[e] = std::move(r);
      }
    });

    // Serial, env-ordered reward-term accumulation.
    for (int e = 0; e < n_envs; ++e) {
      const RewardBreakdown& rb = results[e].reward;
      stats.step_reward_mean += rb.total;
      stats.r_upright += rb.uprightness.weighted;
      stats.r_contact += rb.foot_contact.weighted;
      stats.r_accel += rb.joint_accel.weighted;
      stats.r_power += rb.joint_power.weighted;
      stats.r_action_rate += rb.action_rate.weighted;
    }
  }

  const double denom = double(n_envs) * steps;
  stats.step_reward_mean /= denom;
  stats.r_upright /= denom;
  stats.r_contact /= denom;
  stats.r_accel /= denom;
  stats.r_power /= denom;
  stats.r_action_rate /= denom;

  for (int e = 0; e < n_envs; ++e) {
    for (const auto& ep : episode_ends[e]) {
      ++stats.episodes_finished;
      stats.episode_reward_mean += ep.reward;
      stats.success_rate += ep.success ? 1.0 : 0.0;
    }
    stats.mean_level += envs_[e]->level();
  }
  stats.mean_level /= n_envs;
  if (stats.episodes_finished > 0) {
    stats.episode_reward_mean /= stats.episodes_finished;
    stats.success_rate /= stats.episodes_finished;
  }

  // Bootstrap values for the truncated tails.
  buf.bootstrap_value =
      nets_->critic->forward(nets_->critic_input(cur_priv_, cur_obs_hist_))
          .transpose();
}

PolicyLossStats policy_loss(PolicyNets& nets, const PpoConfig& cfg,
                            const PolicyBatch& batch, bool accumulate_grads) {
  PolicyLossStats out;
  const int m = batch.size();
  const Eigen::Index action_dim = PolicyNets::kActionDim;
  const double eps_clip = cfg.clip;

  const Eigen::ArrayXd log_std = nets.log_std.value.col(0).array();
  const Eigen::ArrayXd sigma = log_std.exp();
  Mlp::Cache actor_cache;
  const Eigen::MatrixXd mean = nets.actor->forward(
      nets.actor_input(batch.obs, batch.obs_hist, batch.v_hat, batch.z),
      actor_cache);

  const Eigen::ArrayXXd zscore =
      (batch.action - mean).array().colwise() / sigma;
  const Eigen::VectorXd logp_new =
      (-0.5 * zscore.square().colwise().sum() - log_std.sum() -
       0.5 * kLog2Pi * double(action_dim))
          .transpose();
  const Eigen::ArrayXd ratio = (logp_new - batch.logp_old).array().exp();
  const Eigen::ArrayXd clipped = ratio.min(1.0 + eps_clip).max(1.0 - eps_clip);
  const Eigen::ArrayXd s1 = ratio * batch.advantage.array();
  const Eigen::ArrayXd s2 = clipped * batch.advantage.array();
  out.surrogate = -s1.min(s2).mean();
  out.entropy =
      log_std.sum() + 0.5 * (1.0 + kLog2Pi) * double(action_dim);
  out.approx_kl = ((ratio - 1.0) - ratio.log()).mean();
  out.clip_fraction = ((ratio - 1.0).abs() > eps_clip).cast<double>().mean();

  Mlp::Cache critic_cache;
  const Eigen::VectorXd v_pred =
      nets.critic
          ->forward(nets.critic_input(batch.priv, batch.obs_hist),
                    critic_cache)
          .transpose();
  out.value_loss =
      cfg.value_coef * (v_pred - batch.returns).squaredNorm() / m;

  out.total = out.surrogate - cfg.entropy_coef * out.entropy + out.value_loss;
  if (!std::isfinite(out.total))
    throw std::runtime_error(
        "ppo_update: non-finite loss (surrogate=" +
        format_double(out.surrogate) +
        ", value=" + format_double(out.value_loss) + "); aborting iteration");
  if (!accumulate_grads) return out;

  // d(loss)/d(logp_i): -rho*A/m on the unclipped branch, 0 when clipped.
  Eigen::ArrayXd dlogp = Eigen::ArrayXd::Zero(m);
  for (int i = 0; i < m; ++i)
    if (s1(i) <= s2(i)) dlogp(i) = -ratio(i) * batch.advantage(i) / m;

  const Eigen::MatrixXd d_mean =
      ((batch.action - mean).array().colwise() / (sigma * sigma)).rowwise() *
      dlogp.transpose();
  nets.actor->backward(actor_cache, d_mean);
  for (Eigen::Index d = 0; d < action_dim; ++d) {
    double g = 0.0;
    for (int i = 0; i < m; ++i)
      g += dlogp(i) * (zscore(d, i) * zscore(d, i) - 1.0);
    nets.log_std.grad(d, 0) += g - cfg.entropy_coef;
  }
  const Eigen::MatrixXd d_v =
      (2.0 * cfg.value_coef / m) * (v_pred - batch.returns).transpose();
  nets.critic->backward(critic_cache, d_v);
  return out;
}

UpdateStats Trainer::update(RolloutBuffer& buf) {
  UpdateStats stats;
  const int m_total = buf.size();
  const int n_minibatches = cfg_.ppo.minibatches;
  const int mb_size = m_total / n_minibatches;
  const Eigen::Index action_dim = PolicyNets::kActionDim;

  std::vector<int> order(m_total);
  for (int i = 0; i < m_total; ++i) order[i] = i;

  int n_updates = 0;
  bool policy_frozen = false;
  for (int epoch = 0; epoch < cfg_.ppo.epochs; ++epoch) {
    // Fisher-Yates driven by the trainer stream.
    for (int i = m_total - 1; i > 0; --i) {
      const int j = static_cast<int>(update_rng_.uniform_int(0, i));
      std::swap(order[i], order[j]);
    }
    for (int mb = 0; mb < n_minibatches; ++mb) {
      const int* idx = order.data() + mb * mb_size;

      PolicyBatch batch;
      batch.obs.resize(nets_->obs_dim, mb_size);
      batch.obs_hist.resize(nets_->obs_hist_dim, mb_size);
      batch.priv.resize(nets_->priv_dim, mb_size);
      batch.action.resize(action_dim, mb_size);
      batch.v_hat.resize(2, mb_size);
      batch.z.resize(nets_->latent_dim, mb_size);
      batch.logp_old.resize(mb_size);
      batch.advantage.resize(mb_size);
      batch.returns.resize(mb_size);
      Eigen::MatrixXd v_true(2, mb_size);
      Eigen::MatrixXd obs_next(nets_->obs_dim, mb_size);
      for (int i = 0; i < mb_size; ++i) {
        const int c = idx[i];
        batch.obs.col(i) = buf.obs.col(c);
        batch.obs_hist.col(i) = buf.obs_hist.col(c);
        batch.priv.col(i) = buf.priv.col(c);
        batch.action.col(i) = buf.action.col(c);
        batch.v_hat.col(i) = buf.v_hat.col(c);
        batch.z.col(i) = buf.z.col(c);
        v_true.col(i) = buf.v_true.col(c);
        obs_next.col(i) = buf.obs_next.col(c);
        batch.logp_old(i) = buf.logp(c);
        batch.advantage(i) = buf.advantage(c);
        batch.returns(i) = buf.returns(c);
      }

      policy_adam_->zero_grad();
      const PolicyLossStats pl =
          policy_loss(*nets_, cfg_.ppo, batch, /*accumulate_grads=*/true);
      stats.policy_grad_norm +=
          policy_adam_->clip_global_norm(cfg_.nets.grad_clip);
      policy_adam_->step();

      // Joint estimator update from the same minibatch.
      if (nets_->cenet) {
        CeNet::Forward f;
        Eigen::MatrixXd eps(nets_->latent_dim, mb_size);
        for (int i = 0; i < mb_size; ++i)
          for (int d = 0; d < nets_->latent_dim; ++d)
            eps(d, i) = update_rng_.normal();
        nets_->cenet->encode_with_eps(batch.obs_hist, f, eps);
        nets_->cenet->decode(f);
        const CeNet::Losses cl =
            nets_->cenet->loss(f, v_true, obs_next, cfg_.nets.beta);
        if (!std::isfinite(cl.total))
          throw std::runtime_error(
              "ppo_update: non-finite estimator loss; aborting iteration");
        cenet_adam_->zero_grad();
        nets_->cenet->backward(f, v_true, obs_next, cfg_.nets.beta, 1.0);
        stats.cenet_grad_norm +=
            cenet_adam_->clip_global_norm(cfg_.nets.grad_clip);
        cenet_adam_->step();
        stats.cenet_v_loss += cl.v_mse;
        stats.cenet_rec_loss += cl.rec_mse;
        stats.cenet_kl += cl.kl;
      }

      stats.surrogate_loss += pl.surrogate;
      stats.value_loss += pl.value_loss;
      stats.entropy += pl.entropy;
      stats.approx_kl += pl.approx_kl;
      stats.clip_fraction += pl.clip_fraction;
      ++n_updates;
    }
  }

  const double inv = 1.0 / n_updates;
  stats.surrogate_loss *= inv;
  stats.value_loss *= inv;
  stats.entropy *= inv;
  stats.approx_kl *= inv;
  stats.clip_fraction *= inv;
  stats.cenet_v_loss *= inv;
  stats.cenet_rec_loss *= inv;
  stats.cenet_kl *= inv;
  stats.policy_grad_norm *= inv;
  stats.cenet_grad_norm *= inv;
  return stats;
}

IterStats Trainer::run_iteration() {
  IterStats stats;
  stats.iteration = ++iteration_;
  RolloutBuffer buf;
  collect_rollout(buf, stats);
  compute_gae(buf, cfg_.ppo.gamma, cfg_.ppo.gae_lambda,
              cfg_.ppo.normalize_advantages);
  stats.update = update(buf);
  return stats;
}

namespace {
std::string metrics_header() {
  return "iteration,step_reward_mean,r_upright,r_contact,r_accel,r_power,"
         "r_action_rate,episodes,episode_reward_mean,success_rate,mean_level,"
         "surrogate_loss,value_loss,entropy,approx_kl,clip_fraction,"
         "cenet_v_loss,cenet_rec_loss,cenet_kl,policy_grad_norm,"
         "cenet_grad_norm";
}

std::string metrics_row(const IterStats& s) {
  auto f = format_double;
  std::string row = std::to_string(s.iteration);
  for (double v :
       {s.step_reward_mean, s.r_upright, s.r_contact, s.r_accel, s.r_power,
        s.r_action_rate, double(s.episodes_finished), s.episode_reward_mean,
        s.success_rate, s.mean_level, s.update.surrogate_loss,
        s.update.value_loss, s.update.entropy, s.update.approx_kl,
        s.update.clip_fraction, s.update.cenet_v_loss,
        s.update.cenet_rec_loss, s.update.cenet_kl,
        s.update.policy_grad_norm, s.update.cenet_grad_norm})
    row += "," + f(v);
  return row;
}
}  // namespace

void Trainer::train(const std::string& out_dir,
                    const std::function<bool(const IterStats&)>& stop) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::uint64_t hash = config_hash(cfg_);

  char hash_hex[32];
  std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                static_cast<unsigned long long>(hash));
  atomic_write_file(out_dir + "/config.snapshot",
                    std::string("# config_hash ") + hash_hex + "\n" +
                        serialize_config_annotated(cfg_));

  const std::string metrics_path = out_dir + "/metrics.csv";
  const bool fresh = iteration_ == 0 || !fs::exists(metrics_path);
  std::ofstream metrics(metrics_path,
                        fresh ? std::ios::trunc : std::ios::app);
  if (!metrics)
    throw std::runtime_error("cannot open " + metrics_path);
  if (fresh) {
    char line[64];
    std::snprintf(line, sizeof line, "# config_hash %s", hash_hex);
    metrics << line << "\n" << metrics_header() << "\n";
  }

  auto save_ckpt = [&](int iter) {
    Checkpoint ck = make_checkpoint();
    ck.save(out_dir + "/ckpt-" + std::to_string(iter));
    ck.save(out_dir + "/ckpt-latest");
  };

  while (iteration_ < cfg_.ppo.iterations) {
    const IterStats stats = run_iteration();
    metrics << metrics_row(stats) << "\n";
    metrics.flush();
    const bool want_stop = stop && stop(stats);
    if (iteration_ % cfg_.ppo.checkpoint_every == 0 ||
        iteration_ == cfg_.ppo.iterations || want_stop)
      save_ckpt(iteration_);
    if (want_stop) break;
  }
}

Checkpoint Trainer::make_checkpoint() const {
  Checkpoint ck;
  ck.config_hash = config_hash(cfg_);
  ck.iteration = iteration_;
  ck.baseline_mode = nets_->baseline;
  for (Tensor* t : nets_->all_tensors())
    ck.params.push_back({t->name, t->value});

  ck.policy_adam.present = true;
  ck.policy_adam.t = policy_adam_->t();
  ck.policy_adam.m = policy_adam_->moments_m();
  ck.policy_adam.v = policy_adam_->moments_v();
  if (cenet_adam_) {
    ck.cenet_adam.present = true;
    ck.cenet_adam.t = cenet_adam_->t();
    ck.cenet_adam.m = cenet_adam_->moments_m();
    ck.cenet_adam.v = cenet_adam_->moments_v();
  }
  for (size_t e = 0; e < envs_.size(); ++e) {
    EnvSnapshot es;
    es.level = envs_[e]->level();
    es.env_stream.s = envs_[e]->stream_state();
    es.act_rng.s = act_rng_[e].state();
    ck.envs.push_back(es);
  }
  ck.trainer_rng.s = update_rng_.state();
  return ck;
}

void Trainer::restore(const Checkpoint& ck) {
  if (ck.baseline_mode != cfg_.ppo.baseline_mode)
    throw std::runtime_error(
        "checkpoint: baseline_mode does not match the configuration");
  initialize();
  for (Tensor* t : nets_->all_tensors()) {
    const NamedTensor* src = ck.find(t->name);
    if (!src)
      throw std::runtime_error("checkpoint: missing tensor " + t->name);
    if (src->value.rows() != t->value.rows() ||
        src->value.cols() != t->value.cols())
      throw std::runtime_error("checkpoint: shape mismatch for " + t->name);
    t->value = src->value;
  }
  auto restore_adam = [](Adam& adam, const AdamSnapshot& snap,
                         const char* which) {
    if (!snap.present) return;
    if (snap.m.size() != adam.params().size())
      throw std::runtime_error(std::string("checkpoint: ") + which +
                               " optimizer state size mismatch");
    adam.set_t(snap.t);
    adam.moments_m() = snap.m;
    adam.moments_v() = snap.v;
  };
  restore_adam(*policy_adam_, ck.policy_adam, "policy");
  if (cenet_adam_) restore_adam(*cenet_adam_, ck.cenet_adam, "estimator");

  if (!ck.envs.empty()) {
    if (ck.envs.size() != envs_.size())
      throw std::runtime_error(
          "checkpoint: environment count does not match the configuration");
    for (size_t e = 0; e < envs_.size(); ++e) {
      envs_[e]->set_level(ck.envs[e].level);
      envs_[e]->set_stream_state(ck.envs[e].env_stream.s);
      act_rng_[e].set_state(ck.envs[e].act_rng.s);
    }
  }
  update_rng_.set_state(ck.trainer_rng.s);
  iteration_ = static_cast<int>(ck.iteration);
  envs_need_reset_ = true;
}

}  // namespace riser
