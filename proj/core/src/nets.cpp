#include "riser/nets.hpp"

#include <cmath>
#include <stdexcept>

namespace riser {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

inline void elu_inplace(Eigen::MatrixXd& z) {
  z = (z.array() > 0.0)
          .select(z.array(), z.array().min(0.0).exp() - 1.0)
          .matrix();
}

// ELU derivative from the activation output: 1 where a > 0, a + 1 below.
inline Eigen::ArrayXXd elu_grad_from_act(const Eigen::MatrixXd& a) {
  return (a.array() > 0.0).select(Eigen::ArrayXXd::Ones(a.rows(), a.cols()),
                                  a.array() + 1.0);
}
}  // namespace

Mlp::Mlp(std::string name, int in_dim, const std::vector<int>& hidden,
         int out_dim)
    : name_(std::move(name)), in_dim_(in_dim), out_dim_(out_dim) {
  if (in_dim < 1 || out_dim < 1)
    throw std::invalid_argument(name_ + ": layer dimensions must be >= 1");
  int prev = in_dim;
  int idx = 0;
  auto add_layer = [&](int width) {
    if (width < 1)
      throw std::invalid_argument(name_ + ": layer dimensions must be >= 1");
    weights_.emplace_back(name_ + ".w" + std::to_string(idx), width, prev);
    biases_.emplace_back(name_ + ".b" + std::to_string(idx), width, 1);
    prev = width;
    ++idx;
  };
  for (int width : hidden) add_layer(width);
  add_layer(out_dim);
}

void Mlp::init(Rng& rng) {
  for (size_t l = 0; l < weights_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(double(weights_[l].value.cols()));
    for (Eigen::Index j = 0; j < weights_[l].value.cols(); ++j)
      for (Eigen::Index i = 0; i < weights_[l].value.rows(); ++i)
        weights_[l].value(i, j) = rng.uniform(-bound, bound);
    biases_[l].value.setZero();
  }
}

void Mlp::scale_output_layer(double scale) {
  weights_.back().value *= scale;
}

int Mlp::last_hidden_dim() const {
  return weights_.size() > 1
             ? static_cast<int>(weights_[weights_.size() - 2].value.rows())
             : in_dim_;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  Cache scratch;
  return forward(x, scratch);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Cache& cache) const {
  if (x.rows() != in_dim_)
    throw std::invalid_argument(name_ + ": input has wrong dimension");
  const size_t n_layers = weights_.size();
  cache.acts.clear();
  cache.acts.reserve(n_layers);
  cache.acts.push_back(x);
  for (size_t l = 0; l + 1 < n_layers; ++l) {
    Eigen::MatrixXd z;
    z.noalias() = weights_[l].value * cache.acts.back();
    z.colwise() += biases_[l].value.col(0);
    elu_inplace(z);
    cache.acts.push_back(std::move(z));
  }
  Eigen::MatrixXd out;
  out.noalias() = weights_.back().value * cache.acts.back();
  out.colwise() += biases_.back().value.col(0);
  return out;
}

const Eigen::MatrixXd& Mlp::last_hidden(const Cache& cache) const {
  return cache.acts.back();
}

Eigen::MatrixXd Mlp::backward(const Cache& cache,
                              const Eigen::MatrixXd& d_out) {
  const int n_layers = static_cast<int>(weights_.size());
  Eigen::MatrixXd d = d_out;
  for (int l = n_layers - 1; l >= 0; --l) {
    // d is the gradient at the pre-activation of layer l (output layer is
    // linear; hidden layers get the ELU factor applied before recursing).
    weights_[l].grad.noalias() += d * cache.acts[l].transpose();
    biases_[l].grad.col(0).noalias() += d.rowwise().sum();
    if (l == 0) {
      return weights_[l].value.transpose() * d;
    }
    Eigen::MatrixXd da = weights_[l].value.transpose() * d;
    d = (da.array() * elu_grad_from_act(cache.acts[l])).matrix();
  }
  return d;
}

std::vector<Tensor*> Mlp::tensors() {
  std::vector<Tensor*> out;
  for (size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

void adam_step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad,
               Eigen::MatrixXd& m, Eigen::MatrixXd& v, long t, double lr,
               double beta1, double beta2, double eps) {
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(beta1, double(t));
  const double bc2 = 1.0 - std::pow(beta2, double(t));
  param.array() -=
      lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
}

Adam::Adam(std::vector<Tensor*> params, double lr, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
      eps_(eps) {
  for (Tensor* p : params_) {
    m_.emplace_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
    v_.emplace_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::zero_grad() {
  for (Tensor* p : params_) p->grad.setZero();
}

double Adam::clip_global_norm(double max_norm) {
  double sq = 0.0;
  for (Tensor* p : params_) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (Tensor* p : params_) p->grad *= scale;
  }
  return norm;
}

void Adam::step() {
  ++t_;
  for (size_t i = 0; i < params_.size(); ++i)
    adam_step(params_[i]->value, params_[i]->grad, m_[i], v_[i], t_, lr_,
              beta1_, beta2_, eps_);
}

double gaussian_logp(const Eigen::VectorXd& sample,
                     const Eigen::VectorXd& mean,
                     const Eigen::VectorXd& log_std) {
  const Eigen::ArrayXd sigma = log_std.array().exp();
  const Eigen::ArrayXd zscore = (sample - mean).array() / sigma;
  return -0.5 * zscore.square().sum() - log_std.sum() -
         0.5 * kLog2Pi * double(sample.size());
}

double gaussian_entropy(const Eigen::VectorXd& log_std) {
  return log_std.sum() + 0.5 * (1.0 + kLog2Pi) * double(log_std.size());
}

Eigen::VectorXd gaussian_sample(const Eigen::VectorXd& mean,
                                const Eigen::VectorXd& log_std, Rng& rng) {
  Eigen::VectorXd out(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i)
    out(i) = mean(i) + std::exp(log_std(i)) * rng.normal();
  return out;
}

double kl_unit_gaussian(const Eigen::VectorXd& mu,
                        const Eigen::VectorXd& log_sigma) {
  const Eigen::ArrayXd var = (2.0 * log_sigma.array()).exp();
  return 0.5 *
         (mu.array().square() + var - 1.0 - 2.0 * log_sigma.array()).sum();
}

CeNet::CeNet(int obs_hist_dim, const std::vector<int>& enc_hidden,
             int latent_dim, const std::vector<int>& dec_hidden, int obs_dim)
    : encoder_("cenet.enc", obs_hist_dim, enc_hidden, 2 + 2 * latent_dim),
      decoder_("cenet.dec", latent_dim, dec_hidden, obs_dim),
      latent_dim_(latent_dim),
      obs_dim_(obs_dim) {}

void CeNet::init(Rng& rng) {
  encoder_.init(rng);
  decoder_.init(rng);
}

void CeNet::encode(const Eigen::MatrixXd& obs_hist, Forward& f, bool sample,
                   Rng* rng) const {
  const Eigen::Index n = obs_hist.cols();
  if (sample) {
    f.eps.resize(latent_dim_, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (int i = 0; i < latent_dim_; ++i) f.eps(i, j) = rng->normal();
  } else {
    f.eps = Eigen::MatrixXd::Zero(latent_dim_, n);
  }
  encode_with_eps(obs_hist, f, f.eps);
}

void CeNet::encode_with_eps(const Eigen::MatrixXd& obs_hist, Forward& f,
                            const Eigen::MatrixXd& eps) const {
  const Eigen::MatrixXd head = encoder_.forward(obs_hist, f.enc_cache);
  f.v_hat = head.topRows(2);
  f.mu = head.middleRows(2, latent_dim_);
  const Eigen::MatrixXd raw_logsig = head.bottomRows(latent_dim_);
  f.log_sig = raw_logsig.cwiseMax(kLogSigMin).cwiseMin(kLogSigMax);
  f.clamp_mask = ((raw_logsig.array() > kLogSigMin) &&
                  (raw_logsig.array() < kLogSigMax))
                     .cast<double>()
                     .matrix();
  if (&f.eps != &eps) f.eps = eps;
  f.z = f.mu + f.log_sig.array().exp().matrix().cwiseProduct(f.eps);
}

void CeNet::decode(Forward& f) const { f.recon = decoder_.forward(f.z, f.dec_cache); }

CeNet::Losses CeNet::loss(const Forward& f, const Eigen::MatrixXd& v_true,
                          const Eigen::MatrixXd& o_next, double beta) const {
  Losses l;
  const double n = double(f.mu.cols());
  l.v_mse = (f.v_hat - v_true).squaredNorm() / n;
  l.rec_mse = (f.recon - o_next).squaredNorm() / n;
  const Eigen::ArrayXXd var = (2.0 * f.log_sig.array()).exp();
  l.kl = 0.5 *
         (f.mu.array().square() + var - 1.0 - 2.0 * f.log_sig.array()).sum() /
         n;
  l.total = l.v_mse + l.rec_mse + beta * l.kl;
  return l;
}

void CeNet::backward(const Forward& f, const Eigen::MatrixXd& v_true,
                     const Eigen::MatrixXd& o_next, double beta,
                     double loss_scale) {
  const double n = double(f.mu.cols());
  const double s = loss_scale / n;

  // Reconstruction path, through the decoder into z.
  Eigen::MatrixXd d_recon = 2.0 * s * (f.recon - o_next);
  Eigen::MatrixXd dz = decoder_.backward(f.dec_cache, d_recon);

  const Eigen::ArrayXXd sigma = f.log_sig.array().exp();
  Eigen::MatrixXd d_mu = dz;  // z = mu + sigma .* eps
  Eigen::MatrixXd d_logsig =
      (dz.array() * sigma * f.eps.array()).matrix();

  // KL term.
  d_mu.array() += beta * s * f.mu.array();
  d_logsig.array() += beta * s * (sigma * sigma - 1.0);

  // Clamped log-sigma entries pass no gradient.
  d_logsig.array() *= f.clamp_mask.array();

  Eigen::MatrixXd d_head(2 + 2 * latent_dim_, f.mu.cols());
  d_head.topRows(2) = 2.0 * s * (f.v_hat - v_true);
  d_head.middleRows(2, latent_dim_) = d_mu;
  d_head.bottomRows(latent_dim_) = d_logsig;
  encoder_.backward(f.enc_cache, d_head);
}

std::vector<Tensor*> CeNet::tensors() {
  std::vector<Tensor*> out = encoder_.tensors();
  for (Tensor* t : decoder_.tensors()) out.push_back(t);
  return out;
}

}  // namespace riser
