#include <doctest.h>

#include <cmath>

#include "riser/nets.hpp"
#include "test_support.hpp"

using namespace riser;
using riser::testing::max_grad_rel_error;

TEST_CASE("mlp with zero weights returns its bias") {
  Mlp net("t", 3, {4}, 2);
  for (Tensor* t : net.tensors()) t->value.setZero();
  net.tensors()[3]->value << 0.5, -1.5;  // output bias
  const Eigen::MatrixXd y = net.forward(Eigen::MatrixXd::Random(3, 7));
  for (int c = 0; c < 7; ++c) {
    CHECK(y(0, c) == doctest::Approx(0.5));
    CHECK(y(1, c) == doctest::Approx(-1.5));
  }
}

TEST_CASE("single linear layer computes W x + b exactly") {
  Mlp net("t", 2, {}, 2);
  auto ts = net.tensors();
  ts[0]->value << 1, 2, 3, 4;  // row-major view of a 2x2
  ts[1]->value << 0.5, -0.5;
  Eigen::VectorXd x(2);
  x << 1, -1;
  const Eigen::VectorXd y = net.forward(x);
  CHECK(y(0) == doctest::Approx(ts[0]->value(0, 0) * 1 +
                                ts[0]->value(0, 1) * -1 + 0.5));
  CHECK(y(1) == doctest::Approx(ts[0]->value(1, 0) * 1 +
                                ts[0]->value(1, 1) * -1 - 0.5));
}

TEST_CASE("random nets give finite outputs for bounded inputs") {
  Rng rng(5);
  Mlp net("t", 8, {32, 32}, 4);
  net.init(rng);
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd x(8);
    for (int i = 0; i < 8; ++i) x(i) = rng.uniform(-10, 10);
    const Eigen::VectorXd y = net.forward(x);
    for (int i = 0; i < 4; ++i) REQUIRE(std::isfinite(y(i)));
  }
}

TEST_CASE("dimension mismatches are rejected") {
  CHECK_THROWS_AS(Mlp("t", 0, {4}, 2), std::invalid_argument);
  CHECK_THROWS_AS(Mlp("t", 3, {0}, 2), std::invalid_argument);
  Mlp net("t", 3, {4}, 2);
  CHECK_THROWS_AS(net.forward(Eigen::MatrixXd::Zero(5, 1)),
                  std::invalid_argument);
}

TEST_CASE("mlp gradients match central finite differences") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Mlp net("t", 5, {16, 8}, 3);
    net.init(rng);
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 4);
    // Scalar probe loss: weighted sum of outputs squared.
    Eigen::MatrixXd w = Eigen::MatrixXd::Random(3, 4);
    auto loss = [&] { return (net.forward(x).array() * w.array()).square().sum(); };
    auto backward = [&] {
      Mlp::Cache cache;
      const Eigen::MatrixXd y = net.forward(x, cache);
      net.backward(cache, (2.0 * y.array() * w.array().square()).matrix());
    };
    const double err =
        max_grad_rel_error(net.tensors(), loss, backward, rng, 10);
    REQUIRE(err < 1e-4);
  }
}

TEST_CASE("mlp input gradient matches finite differences") {
  Rng rng(13);
  Mlp net("t", 6, {12}, 2);
  net.init(rng);
  Eigen::VectorXd x = Eigen::VectorXd::Random(6);
  Mlp::Cache cache;
  net.forward(x, cache);
  for (Tensor* t : net.tensors()) t->grad.setZero();
  const Eigen::MatrixXd dx = net.backward(cache, Eigen::MatrixXd::Ones(2, 1));
  const double h = 1e-6;
  for (int i = 0; i < 6; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    const double fd =
        (net.forward(xp).sum() - net.forward(xm).sum()) / (2 * h);
    REQUIRE(std::abs(fd - dx(i, 0)) < 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("zero upstream gradient produces zero parameter gradients") {
  Rng rng(3);
  Mlp net("t", 4, {8}, 2);
  net.init(rng);
  Mlp::Cache cache;
  net.forward(Eigen::MatrixXd::Random(4, 3), cache);
  for (Tensor* t : net.tensors()) t->grad.setZero();
  net.backward(cache, Eigen::MatrixXd::Zero(2, 3));
  for (Tensor* t : net.tensors()) CHECK(t->grad.norm() == 0.0);
}

TEST_CASE("gradients are additive over heads") {
  Rng rng(7);
  Mlp net("t", 4, {8}, 2);
  net.init(rng);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 5);
  Eigen::MatrixXd d1 = Eigen::MatrixXd::Random(2, 5);
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Random(2, 5);

  Mlp::Cache cache;
  net.forward(x, cache);
  for (Tensor* t : net.tensors()) t->grad.setZero();
  net.backward(cache, d1);
  net.backward(cache, d2);
  std::vector<Eigen::MatrixXd> separate;
  for (Tensor* t : net.tensors()) separate.push_back(t->grad);

  for (Tensor* t : net.tensors()) t->grad.setZero();
  net.backward(cache, d1 + d2);
  int i = 0;
  for (Tensor* t : net.tensors())
    REQUIRE((t->grad - separate[i++]).norm() < 1e-10);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Tensor p("p", 3, 3);
  p.value.setRandom();
  const Eigen::MatrixXd before = p.value;
  Adam adam({&p}, 1e-3, 0.9, 0.999, 1e-8);
  adam.zero_grad();
  adam.step();
  CHECK((p.value - before).norm() == 0.0);
}

TEST_CASE("adam: constant gradient converges to lr-sized signed steps") {
  Tensor p("p", 1, 1);
  p.value(0, 0) = 0.0;
  Adam adam({&p}, 1e-3, 0.9, 0.999, 1e-8);
  double prev = p.value(0, 0);
  double step = 0;
  for (int t = 0; t < 500; ++t) {
    p.grad(0, 0) = 2.5;  // constant positive gradient
    adam.step();
    step = prev - p.value(0, 0);
    prev = p.value(0, 0);
  }
  CHECK(step == doctest::Approx(1e-3).epsilon(0.01));
}

TEST_CASE("adam stays finite under bounded random gradients") {
  Rng rng(9);
  Tensor p("p", 8, 8);
  p.value.setRandom();
  Adam adam({&p}, 1e-3, 0.9, 0.999, 1e-8);
  for (int t = 0; t < 100000; ++t) {
    for (int i = 0; i < 64; ++i)
      p.grad.data()[i] = rng.uniform(-1e3, 1e3);
    adam.step();
  }
  REQUIRE(p.value.allFinite());
  for (auto& m : adam.moments_m()) REQUIRE(m.allFinite());
  for (auto& v : adam.moments_v()) REQUIRE(v.allFinite());
}

TEST_CASE("gaussian head closed forms") {
  SUBCASE("log density at the mean, unit sigma, dim 4") {
    const Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
    const Eigen::VectorXd log_std = Eigen::VectorXd::Zero(4);
    CHECK(gaussian_logp(mean, mean, log_std) ==
          doctest::Approx(-4 * 0.9189385).epsilon(1e-6));
  }
  SUBCASE("entropy in one dimension at sigma 1") {
    const Eigen::VectorXd log_std = Eigen::VectorXd::Zero(1);
    CHECK(gaussian_entropy(log_std) == doctest::Approx(1.41894).epsilon(1e-5));
  }
  SUBCASE("density integrates to one (1-D quadrature over a 6-sigma box)") {
    const Eigen::VectorXd mean = Eigen::VectorXd::Constant(1, 0.3);
    const Eigen::VectorXd log_std = Eigen::VectorXd::Constant(1, 0.4);
    const double sigma = std::exp(0.4);
    const int n = 20000;
    double integral = 0.0;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd x(1);
      x(0) = 0.3 - 6 * sigma + 12 * sigma * (i + 0.5) / n;
      integral += std::exp(gaussian_logp(x, mean, log_std)) * 12 * sigma / n;
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(0.01));
  }
  SUBCASE("sample moments match the parameters") {
    Rng rng(21);
    Eigen::VectorXd mean(2), log_std(2);
    mean << 1.0, -2.0;
    log_std << std::log(0.5), std::log(2.0);
    Eigen::Vector2d sum = Eigen::Vector2d::Zero(), sum2 = Eigen::Vector2d::Zero();
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd s = gaussian_sample(mean, log_std, rng);
      sum += s;
      sum2 += s.cwiseProduct(s);
    }
    CHECK(sum(0) / n == doctest::Approx(1.0).epsilon(0.02));
    CHECK(sum(1) / n == doctest::Approx(-2.0).epsilon(0.02));
    CHECK(std::sqrt(sum2(0) / n - 1.0) == doctest::Approx(0.5).epsilon(0.03));
  }
}

TEST_CASE("kl against the unit gaussian") {
  const Eigen::VectorXd z1 = Eigen::VectorXd::Zero(1);
  CHECK(kl_unit_gaussian(Eigen::VectorXd::Zero(8), Eigen::VectorXd::Zero(8)) ==
        doctest::Approx(0.0));
  CHECK(kl_unit_gaussian(Eigen::VectorXd::Ones(1), z1) ==
        doctest::Approx(0.5));
  CHECK(kl_unit_gaussian(z1, Eigen::VectorXd::Constant(1, std::log(2.0))) ==
        doctest::Approx(1.5 - std::log(2.0)).epsilon(1e-9));

  // Monte Carlo cross-check: KL = E_q[log q - log p], q = N(mu, sigma^2).
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd mu(3), log_sig(3);
    for (int i = 0; i < 3; ++i) {
      mu(i) = rng.uniform(-1.5, 1.5);
      log_sig(i) = rng.uniform(-0.7, 0.7);
    }
    const double closed = kl_unit_gaussian(mu, log_sig);
    const int n = 200000;
    double sum = 0, sum2 = 0;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd x = gaussian_sample(mu, log_sig, rng);
      const double term =
          gaussian_logp(x, mu, log_sig) - gaussian_logp(x, zero, zero);
      sum += term;
      sum2 += term * term;
    }
    const double mc = sum / n;
    const double se = std::sqrt((sum2 / n - mc * mc) / n);
    REQUIRE(std::abs(mc - closed) < 3 * se + 1e-9);
  }
}

TEST_CASE("estimator perfect-fit construction gives zero loss") {
  CeNet net(6, {4}, 3, {4}, 5);
  for (Tensor* t : net.tensors()) t->value.setZero();
  Eigen::VectorXd v0(2);
  v0 << 0.7, -0.3;
  Eigen::VectorXd o0(5);
  o0 << 1, 2, 3, 4, 5;
  net.encoder().tensors().back()->value.topRows(2) = v0;  // head bias
  net.decoder().tensors().back()->value = o0;
  Rng rng(5);
  CeNet::Forward f;
  net.encode(Eigen::MatrixXd::Random(6, 9), f, /*sample=*/true, &rng);
  net.decode(f);
  const auto l = net.loss(f, v0.replicate(1, 9), o0.replicate(1, 9), 1.0);
  CHECK(l.v_mse == doctest::Approx(0.0));
  CHECK(l.rec_mse == doctest::Approx(0.0));
  CHECK(l.kl == doctest::Approx(0.0));
  CHECK(l.total == doctest::Approx(0.0));
}

TEST_CASE("estimator gradients match finite differences (reparameterized)") {
  Rng rng(23);
  for (int trial = 0; trial < 8; ++trial) {
    CeNet net(7, {12}, 4, {10}, 6);
    net.init(rng);
    const Eigen::MatrixXd oh = Eigen::MatrixXd::Random(7, 5);
    const Eigen::MatrixXd v_true = Eigen::MatrixXd::Random(2, 5);
    const Eigen::MatrixXd o_next = Eigen::MatrixXd::Random(6, 5);
    Eigen::MatrixXd eps(4, 5);
    for (int i = 0; i < 20; ++i) eps.data()[i] = rng.normal();
    const double beta = trial % 2 == 0 ? 1.0 : 0.37;

    auto loss = [&] {
      CeNet::Forward f;
      net.encode_with_eps(oh, f, eps);
      net.decode(f);
      return net.loss(f, v_true, o_next, beta).total;
    };
    auto backward = [&] {
      CeNet::Forward f;
      net.encode_with_eps(oh, f, eps);
      net.decode(f);
      net.backward(f, v_true, o_next, beta, 1.0);
    };
    const double err =
        max_grad_rel_error(net.tensors(), loss, backward, rng, 12);
    REQUIRE(err < 1e-4);
  }
}

TEST_CASE("fixed noise makes the latent a deterministic function") {
  Rng rng(29);
  CeNet net(6, {8}, 3, {8}, 5);
  net.init(rng);
  const Eigen::MatrixXd oh = Eigen::MatrixXd::Random(6, 4);
  Eigen::MatrixXd eps = Eigen::MatrixXd::Random(3, 4);
  CeNet::Forward a, b;
  net.encode_with_eps(oh, a, eps);
  net.encode_with_eps(oh, b, eps);
  CHECK(a.z == b.z);
  // And z = mu + sigma .* eps holds exactly.
  const Eigen::MatrixXd expect =
      a.mu + a.log_sig.array().exp().matrix().cwiseProduct(eps);
  CHECK((a.z - expect).norm() == 0.0);
}

TEST_CASE("beta 0 with mean latent removes every log-sigma gradient path") {
  Rng rng(31);
  CeNet net(6, {8}, 3, {8}, 5);
  net.init(rng);
  const Eigen::MatrixXd oh = Eigen::MatrixXd::Random(6, 4);
  CeNet::Forward f;
  net.encode_with_eps(oh, f, Eigen::MatrixXd::Zero(3, 4));  // z = mu
  net.decode(f);
  for (Tensor* t : net.tensors()) t->grad.setZero();
  net.backward(f, Eigen::MatrixXd::Random(2, 4), Eigen::MatrixXd::Random(5, 4),
               /*beta=*/0.0, 1.0);
  // The log-sigma rows of the encoder head weight gradient must be zero.
  Tensor* head_w = net.encoder().tensors()[net.encoder().tensors().size() - 2];
  CHECK(head_w->grad.bottomRows(3).norm() == 0.0);
}

TEST_CASE("log-sigma output is clamped into its declared range") {
  CeNet net(4, {6}, 2, {6}, 3);
  for (Tensor* t : net.tensors()) t->value.setZero();
  // Huge bias pushes raw log-sigma far out of range.
  net.encoder().tensors().back()->value.bottomRows(2).setConstant(100.0);
  CeNet::Forward f;
  net.encode_with_eps(Eigen::MatrixXd::Random(4, 3), f,
                      Eigen::MatrixXd::Zero(2, 3));
  CHECK((f.log_sig.array() <= CeNet::kLogSigMax).all());
  CHECK((f.log_sig.array() >= CeNet::kLogSigMin).all());
}
