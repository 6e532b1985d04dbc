#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "riser/eval.hpp"
#include "riser/rng.hpp"

namespace riser {

namespace {

Eigen::MatrixXd pairwise_sq_dist(const Eigen::MatrixXd& x) {
  const Eigen::VectorXd sq = x.rowwise().squaredNorm();
  Eigen::MatrixXd d =
      (-2.0 * x * x.transpose()).colwise() + sq;
  d.rowwise() += sq.transpose();
  return d.cwiseMax(0.0);
}

// Conditional affinities for one row via bisection on the kernel precision
// so the distribution's Shannon entropy hits log(perplexity).
void calibrate_row(const Eigen::VectorXd& sq_dist, Eigen::Index self,
                   double perplexity, Eigen::VectorXd& p_row) {
  const double target_h = std::log(perplexity);  // nats
  double beta = 1.0, beta_lo = 0.0;
  double beta_hi = std::numeric_limits<double>::infinity();
  const Eigen::Index n = sq_dist.size();
  for (int it = 0; it < 200; ++it) {
    double sum_p = 0.0, sum_dp = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == self) {
        p_row(j) = 0.0;
        continue;
      }
      const double pj = std::exp(-beta * sq_dist(j));
      p_row(j) = pj;
      sum_p += pj;
      sum_dp += pj * sq_dist(j);
    }
    if (sum_p <= 0.0) {
      // beta ran away; fall back toward the low bracket
      beta_hi = beta;
      beta = beta_lo > 0.0 ? 0.5 * (beta_lo + beta_hi) : beta / 10.0;
      continue;
    }
    // H = log(sum_p) + beta * E[d]
    const double h = std::log(sum_p) + beta * sum_dp / sum_p;
    const double diff = h - target_h;
    if (std::abs(diff) < 1e-7) {
      p_row /= sum_p;
      return;
    }
    if (diff > 0) {  // entropy too high -> sharpen
      beta_lo = beta;
      beta = std::isinf(beta_hi) ? beta * 2.0 : 0.5 * (beta_lo + beta_hi);
    } else {
      beta_hi = beta;
      beta = beta_lo > 0.0 ? 0.5 * (beta_lo + beta_hi) : beta / 2.0;
    }
  }
  double sum_p = p_row.sum();
  if (sum_p <= 0.0) {
    // Degenerate row (all neighbors at identical distance extremes):
    // fall back to uniform to stay a probability distribution.
    p_row.setConstant(1.0 / double(n - 1));
    p_row(self) = 0.0;
    return;
  }
  p_row /= sum_p;
}

}  // namespace

Eigen::MatrixXd tsne_input_affinities(const Eigen::MatrixXd& data,
                                      double perplexity) {
  const Eigen::Index n = data.rows();
  if (perplexity >= double(n) / 3.0)
    throw std::invalid_argument("tsne: perplexity must be < n/3");
  const Eigen::MatrixXd d = pairwise_sq_dist(data);
  Eigen::MatrixXd p(n, n);
  Eigen::VectorXd row(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    calibrate_row(d.row(i), i, perplexity, row);
    p.row(i) = row.transpose();
  }
  return p;
}

TsneResult tsne_embed(const Eigen::MatrixXd& data, const TsneOptions& opts) {
  const Eigen::Index n = data.rows();
  if (n > 5000)
    throw std::invalid_argument(
        "tsne: exact variant is limited to 5000 points");
  if (n < 4) throw std::invalid_argument("tsne: need at least 4 points");
  if (opts.perplexity >= double(n) / 3.0)
    throw std::invalid_argument("tsne: perplexity must be < n/3");

  TsneResult res;
  // Degenerate input: every point identical.
  bool all_same = true;
  for (Eigen::Index i = 1; i < n && all_same; ++i)
    all_same = (data.row(i) - data.row(0)).norm() == 0.0;
  if (all_same) {
    std::fprintf(stderr,
                 "tsne: all %lld input points identical; returning origin\n",
                 static_cast<long long>(n));
    res.points = Eigen::MatrixXd::Zero(n, 2);
    res.degenerate = true;
    return res;
  }

  // Symmetrized joint affinities.
  Eigen::MatrixXd p = tsne_input_affinities(data, opts.perplexity);
  p = (p + p.transpose()).eval() / (2.0 * double(n));
  p = p.cwiseMax(1e-300);
  for (Eigen::Index i = 0; i < n; ++i) p(i, i) = 0.0;

  Eigen::MatrixXd y(n, 2);
  Rng rng(mix_seed({opts.seed, 0x74736e65}));
  for (Eigen::Index i = 0; i < n; ++i)
    for (int d = 0; d < 2; ++d) y(i, d) = 1e-4 * rng.normal();

  Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(n, 2);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);
  Eigen::MatrixXd grad(n, 2), q_tilde(n, n);

  const double p_scale = opts.exaggeration;
  double step_scale = 1.0;

  auto kl_divergence = [&](const Eigen::MatrixXd& yy) {
    Eigen::MatrixXd dy = pairwise_sq_dist(yy);
    double sum_q = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        sum_q += 1.0 / (1.0 + dy(i, j));
      }
    double kl = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j || p(i, j) <= 0.0) continue;
        const double q =
            std::max(1.0 / (1.0 + dy(i, j)) / sum_q, 1e-300);
        kl += p(i, j) * std::log(p(i, j) / q);
      }
    return kl;
  };

  double prev_kl = std::numeric_limits<double>::infinity();
  res.kl_trace.reserve(opts.iterations);

  for (int iter = 0; iter < opts.iterations; ++iter) {
    const bool exaggerating = iter < opts.exaggeration_iters;
    const double momentum = iter < opts.exaggeration_iters ? 0.5 : 0.8;

    // Student-t kernel and its normalization.
    Eigen::MatrixXd dy = pairwise_sq_dist(y);
    double sum_q = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) {
          q_tilde(i, j) = 0.0;
          continue;
        }
        q_tilde(i, j) = 1.0 / (1.0 + dy(i, j));
        sum_q += q_tilde(i, j);
      }
    }

    grad.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double pij = exaggerating ? p_scale * p(i, j) : p(i, j);
        const double mult = (pij - q_tilde(i, j) / sum_q) * q_tilde(i, j);
        grad.row(i) += 4.0 * mult * (y.row(i) - y.row(j));
      }
    }

    // Adaptive per-coordinate gains, as in the reference descent scheme.
    for (Eigen::Index i = 0; i < n; ++i)
      for (int d = 0; d < 2; ++d) {
        const bool same_sign =
            (grad(i, d) > 0.0) == (velocity(i, d) > 0.0);
        gains(i, d) = same_sign ? std::max(gains(i, d) * 0.8, 0.01)
                                : gains(i, d) + 0.2;
      }

    const Eigen::MatrixXd y_prev = y;
    velocity = momentum * velocity -
               (opts.learning_rate * step_scale) *
                   gains.cwiseProduct(grad);
    y += velocity;
    y.rowwise() -= y.colwise().mean();

    double kl = kl_divergence(y);
    if (!exaggerating) {
      // Monotone safeguard on the true objective: a step that would
      // increase KL is rejected and the step size decays.
      if (kl > prev_kl + 1e-12) {
        y = y_prev;
        velocity.setZero();
        step_scale *= 0.5;
        kl = prev_kl;
      } else {
        prev_kl = kl;
      }
    } else {
      prev_kl = std::numeric_limits<double>::infinity();
    }
    res.kl_trace.push_back(kl);
  }

  res.points = y;
  return res;
}

}  // namespace riser
