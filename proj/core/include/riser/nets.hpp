#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "riser/rng.hpp"

namespace riser {

/// Named parameter array with its gradient accumulator. Biases are n x 1.
struct Tensor {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;

  Tensor(std::string n, int rows, int cols)
      : name(std::move(n)),
        value(Eigen::MatrixXd::Zero(rows, cols)),
        grad(Eigen::MatrixXd::Zero(rows, cols)) {}
};

/// Dense network with ELU hidden activations and a linear output layer.
/// Batches are column-major: X is (in_dim x N).
class Mlp {
 public:
  Mlp(std::string name, int in_dim, const std::vector<int>& hidden,
      int out_dim);

  /// Uniform(+-1/sqrt(fan_in)) weights, zero biases.
  void init(Rng& rng);
  /// Multiplies the output layer weights by `scale` (small initial heads).
  void scale_output_layer(double scale);

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  int last_hidden_dim() const;

  struct Cache {
    std::vector<Eigen::MatrixXd> acts;  // inputs to each layer
  };

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache& cache) const;
  /// Activation of the last hidden layer for the cached forward.
  const Eigen::MatrixXd& last_hidden(const Cache& cache) const;
  /// Accumulates parameter gradients for dY and returns dX.
  Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& d_out);

  std::vector<Tensor*> tensors();

 private:
  std::string name_;
  int in_dim_;
  int out_dim_;
  std::vector<Tensor> weights_;
  std::vector<Tensor> biases_;
};

/// Bias-corrected Adam update on one tensor; t is 1-based.
void adam_step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad,
               Eigen::MatrixXd& m, Eigen::MatrixXd& v, long t, double lr,
               double beta1, double beta2, double eps);

/// Adam over a fixed tensor group, with global-norm gradient clipping.
class Adam {
 public:
  Adam(std::vector<Tensor*> params, double lr, double beta1, double beta2,
       double eps);

  void zero_grad();
  /// Scales gradients so their global norm is at most max_norm; returns the
  /// pre-clip norm.
  double clip_global_norm(double max_norm);
  void step();

  long t() const { return t_; }
  const std::vector<Tensor*>& params() const { return params_; }
  std::vector<Eigen::MatrixXd>& moments_m() { return m_; }
  std::vector<Eigen::MatrixXd>& moments_v() { return v_; }
  void set_t(long t) { t_ = t; }

 private:
  std::vector<Tensor*> params_;
  std::vector<Eigen::MatrixXd> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

// Diagonal-Gaussian policy head with a state-independent log-std vector.
double gaussian_logp(const Eigen::VectorXd& sample, const Eigen::VectorXd& mean,
                     const Eigen::VectorXd& log_std);
double gaussian_entropy(const Eigen::VectorXd& log_std);
Eigen::VectorXd gaussian_sample(const Eigen::VectorXd& mean,
                                const Eigen::VectorXd& log_std, Rng& rng);

/// KL(N(mu, sigma^2) || N(0, I)) = sum 0.5*(mu^2 + sigma^2 - 1 - 2 log sigma).
double kl_unit_gaussian(const Eigen::VectorXd& mu,
                        const Eigen::VectorXd& log_sigma);

/// Context estimator: encoder on the temporal observation producing the
/// velocity estimate and a Gaussian latent, decoder reconstructing the next
/// observation from the reparameterized latent sample.
class CeNet {
 public:
  CeNet(int obs_hist_dim, const std::vector<int>& enc_hidden, int latent_dim,
        const std::vector<int>& dec_hidden, int obs_dim);

  void init(Rng& rng);

  static constexpr double kLogSigMin = -10.0;
  static constexpr double kLogSigMax = 4.0;

  struct Forward {
    Mlp::Cache enc_cache, dec_cache;
    Eigen::MatrixXd v_hat;    // 2 x N
    Eigen::MatrixXd mu;       // L x N
    Eigen::MatrixXd log_sig;  // L x N, clamped
    Eigen::MatrixXd clamp_mask;
    Eigen::MatrixXd eps;      // recorded noise
    Eigen::MatrixXd z;        // mu + sigma .* eps (or mu when not sampling)
    Eigen::MatrixXd recon;
  };

  /// sample=false uses z = mu (inference path).
  void encode(const Eigen::MatrixXd& obs_hist, Forward& f, bool sample,
              Rng* rng) const;
  /// Reuses recorded eps instead of drawing fresh noise.
  void encode_with_eps(const Eigen::MatrixXd& obs_hist, Forward& f,
                       const Eigen::MatrixXd& eps) const;
  void decode(Forward& f) const;

  struct Losses {
    double v_mse = 0.0;
    double rec_mse = 0.0;
    double kl = 0.0;
    double total = 0.0;
  };
  /// Per-sample sums over dimensions, averaged over the batch:
  /// total = MSE(v_hat, v) + MSE(recon, o_next) + beta * KL.
  Losses loss(const Forward& f, const Eigen::MatrixXd& v_true,
              const Eigen::MatrixXd& o_next, double beta) const;
  /// Backward of loss_scale * total into the parameter gradients.
  void backward(const Forward& f, const Eigen::MatrixXd& v_true,
                const Eigen::MatrixXd& o_next, double beta, double loss_scale);

  Mlp& encoder() { return encoder_; }
  Mlp& decoder() { return decoder_; }
  int latent_dim() const { return latent_dim_; }
  int obs_dim() const { return obs_dim_; }
  std::vector<Tensor*> tensors();

 private:
  Mlp encoder_;
  Mlp decoder_;
  int latent_dim_;
  int obs_dim_;
};

}  // namespace riser
