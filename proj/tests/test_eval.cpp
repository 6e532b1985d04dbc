#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "riser/eval.hpp"

using namespace riser;

namespace {
RunConfig small_cfg() {
  RunConfig cfg;
  cfg.seed = 3;
  cfg.ppo.n_envs = 2;
  cfg.ppo.rollout_steps = 4;
  cfg.ppo.minibatches = 1;
  cfg.ppo.epochs = 1;
  cfg.nets.actor_hidden = {16};
  cfg.nets.critic_hidden = {16};
  cfg.nets.cenet_hidden = {16};
  cfg.nets.decoder_hidden = {16};
  cfg.nets.latent_dim = 4;
  validate_config(cfg);
  return cfg;
}

Checkpoint fresh_checkpoint(const RunConfig& cfg) {
  Trainer t(cfg, 1);
  t.initialize();
  return t.make_checkpoint();
}

// Ideal stub: teleports the robot into a settled stand every tick, on the
// most level patch of the field so both feet seat regardless of terrain.
Eigen::Vector4d teleport_to_stand(const Eigen::VectorXd&, RecoveryEnv& env) {
  const Heightfield& hf = env.terrain();
  RobotState s;
  s.q = env.sim().model().theta_stand;
  s.z = 3.0;
  s.x = 0.0;
  env.sim().set_state(s);
  const Eigen::Vector2d fl = env.sim().foot_position(0);
  const Eigen::Vector2d fr = env.sim().foot_position(1);
  const double off_l = fl.x(), off_r = fr.x();  // foot x offsets from base 0
  double best_x = 4.0, best_diff = 1e300;
  for (double x = 1.5; x <= 6.5; x += 0.01) {
    const double diff = std::abs(hf.height_at(x + off_l) - hf.height_at(x + off_r));
    if (diff < best_diff) {
      best_diff = diff;
      best_x = x;
    }
  }
  s.x = best_x;
  env.sim().set_state(s);
  // Seat the higher foot with ~1 mm of penetration.
  const double clearance = env.sim().min_terrain_clearance(hf);
  s.z = 3.0 - clearance - 0.001 - best_diff;
  env.sim().set_state(s);
  return Eigen::Vector4d::Zero();
}
}  // namespace

TEST_CASE("teleporting oracle policy recovers at every level") {
  const RunConfig cfg = small_cfg();
  for (int level : {0, 5, 9}) {
    const SuccessStats stats =
        run_success_trials(cfg, TrialPolicy(teleport_to_stand),
                           TerrainKind::Discrete, level, 6, 2);
    CHECK(stats.mean == doctest::Approx(1.0));
    CHECK(stats.stddev == doctest::Approx(0.0));
  }
}

TEST_CASE("zero-action policy from inverted drops never recovers") {
  RunConfig cfg = small_cfg();
  cfg.sim.drop_roll_min = M_PI - 0.05;  // land on the back
  cfg.sim.drop_roll_max = M_PI + 0.05;
  cfg.sim.disturb_prob = 0.0;
  const TrialPolicy zero = [](const Eigen::VectorXd&, RecoveryEnv&) {
    return Eigen::Vector4d::Zero();
  };
  const SuccessStats stats =
      run_success_trials(cfg, zero, TerrainKind::Flat, 0, 10, 2);
  CHECK(stats.mean == doctest::Approx(0.0));
}

TEST_CASE("success statistics replay identically and ignore worker count") {
  const RunConfig cfg = small_cfg();
  const Checkpoint ck = fresh_checkpoint(cfg);
  const PolicyRuntime policy(cfg, ck);
  ThreadPool pool3(3);
  const SuccessStats a =
      run_success_trials(cfg, policy, TerrainKind::Rough, 2, 8, 3);
  const SuccessStats b =
      run_success_trials(cfg, policy, TerrainKind::Rough, 2, 8, 3);
  const SuccessStats c =
      run_success_trials(cfg, policy, TerrainKind::Rough, 2, 8, 3, &pool3);
  CHECK(a.per_seed == b.per_seed);
  CHECK(a.per_seed == c.per_seed);
  CHECK(a.mean == b.mean);
}

TEST_CASE("episode result timing invariant") {
  const RunConfig cfg = small_cfg();
  const EpisodeResult res = run_episode(
      cfg, TerrainKind::Flat, 0, 99, TrialPolicy(teleport_to_stand));
  REQUIRE(res.recovered);
  REQUIRE(res.time_to_recover.has_value());
  CHECK(*res.time_to_recover <= 5.0);
  CHECK(res.failure.empty());

  const TrialPolicy zero = [](const Eigen::VectorXd&, RecoveryEnv&) {
    return Eigen::Vector4d::Zero();
  };
  RunConfig inv = cfg;
  inv.sim.drop_roll_min = M_PI - 0.01;
  inv.sim.drop_roll_max = M_PI + 0.01;
  const EpisodeResult fail =
      run_episode(inv, TerrainKind::Flat, 0, 99, zero);
  CHECK_FALSE(fail.recovered);
  CHECK_FALSE(fail.time_to_recover.has_value());
  CHECK(fail.failure == "not_recovered");
}

TEST_CASE("latent recording counts, labels, and baseline feature width") {
  const RunConfig cfg = small_cfg();
  const Checkpoint ck = fresh_checkpoint(cfg);
  const PolicyRuntime policy(cfg, ck);
  const std::vector<LatentScenario> scenarios = {
      {TerrainKind::Flat, 0, 2}, {TerrainKind::Rough, 3, 2}};
  const auto records = record_latents(cfg, policy, scenarios);
  CHECK(records.size() == 2 * 2 * size_t(cfg.episode_steps()));
  for (const auto& r : records) {
    REQUIRE(r.z.size() == cfg.nets.latent_dim);
    REQUIRE((r.kind == TerrainKind::Flat || r.kind == TerrainKind::Rough));
    if (r.kind == TerrainKind::Flat) REQUIRE(r.level == 0);
    if (r.kind == TerrainKind::Rough) REQUIRE(r.level == 3);
  }

  RunConfig bcfg = cfg;
  bcfg.ppo.baseline_mode = true;
  const Checkpoint bck = fresh_checkpoint(bcfg);
  const PolicyRuntime bpolicy(bcfg, bck);
  const auto brecords =
      record_latents(bcfg, bpolicy, {{TerrainKind::Flat, 0, 1}});
  REQUIRE(!brecords.empty());
  CHECK(brecords[0].z.size() == bcfg.nets.actor_hidden.back());
}

TEST_CASE("latents csv round trip") {
  const RunConfig cfg = small_cfg();
  std::vector<LatentRecord> records;
  Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    LatentRecord r;
    r.z = Eigen::VectorXd::Random(5);
    r.kind = i % 2 ? TerrainKind::Slope : TerrainKind::Stairs;
    r.level = i % 10;
    r.tick = i;
    records.push_back(r);
  }
  const std::string path = "test_latents.csv";
  save_latents_csv(records, path, 0xabcdef12345678ULL);
  const LatentCsv csv = load_latents_csv(path);
  REQUIRE(csv.z.rows() == 20);
  REQUIRE(csv.z.cols() == 5);
  CHECK(csv.config_hash == 0xabcdef12345678ULL);
  for (int i = 0; i < 20; ++i) {
    REQUIRE(csv.z(i, 0) == records[i].z(0));
    REQUIRE(csv.kinds[i] == to_string(records[i].kind));
    REQUIRE(csv.levels[i] == records[i].level);
  }
  std::filesystem::remove(path);
}

TEST_CASE("tsne input affinities: rows sum to 1 and hit the target entropy") {
  Rng rng(19);
  Eigen::MatrixXd x(60, 4);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const double perplexity = 12.0;
  const Eigen::MatrixXd p = tsne_input_affinities(x, perplexity);
  for (int i = 0; i < 60; ++i) {
    REQUIRE(p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
    double h2 = 0.0;  // Shannon entropy, bits
    for (int j = 0; j < 60; ++j)
      if (p(i, j) > 0) h2 -= p(i, j) * std::log2(p(i, j));
    REQUIRE(std::abs(h2 - std::log2(perplexity)) < 1e-4);
  }
}

TEST_CASE("tsne separates well-separated clusters with full purity") {
  Rng rng(23);
  const int per = 40;
  Eigen::MatrixXd x(2 * per, 6);
  std::vector<int> labels(2 * per);
  for (int i = 0; i < 2 * per; ++i) {
    labels[i] = i < per ? 0 : 1;
    for (int d = 0; d < 6; ++d)
      x(i, d) = rng.normal() + (labels[i] ? 20.0 : 0.0);  // 20 sigma apart
  }
  TsneOptions opts;
  opts.perplexity = 10;
  opts.iterations = 600;
  opts.exaggeration_iters = 150;
  opts.seed = 5;
  const TsneResult res = tsne_embed(x, opts);
  REQUIRE(res.points.rows() == 2 * per);
  REQUIRE_FALSE(res.degenerate);

  // Nearest-neighbor label purity in the embedding.
  int pure = 0;
  for (int i = 0; i < 2 * per; ++i) {
    double best = 1e300;
    int best_j = -1;
    for (int j = 0; j < 2 * per; ++j) {
      if (i == j) continue;
      const double d = (res.points.row(i) - res.points.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    pure += labels[i] == labels[best_j] ? 1 : 0;
  }
  CHECK(pure == 2 * per);

  // KL is non-increasing after the exaggeration phase and finite.
  for (size_t i = opts.exaggeration_iters + 1; i < res.kl_trace.size(); ++i)
    REQUIRE(res.kl_trace[i] <= res.kl_trace[i - 1] + 1e-9);
  CHECK(std::isfinite(res.kl_trace.back()));
}

TEST_CASE("tsne is deterministic in all inputs") {
  Rng rng(29);
  Eigen::MatrixXd x(30, 3);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  TsneOptions opts;
  opts.perplexity = 5;
  opts.iterations = 120;
  opts.exaggeration_iters = 40;
  opts.seed = 7;
  const TsneResult a = tsne_embed(x, opts);
  const TsneResult b = tsne_embed(x, opts);
  CHECK(a.points == b.points);
  opts.seed = 8;
  const TsneResult c = tsne_embed(x, opts);
  CHECK(a.points != c.points);
}

TEST_CASE("tsne degenerate and precondition handling") {
  Eigen::MatrixXd same = Eigen::MatrixXd::Ones(20, 3);
  TsneOptions opts;
  opts.perplexity = 4;
  const TsneResult res = tsne_embed(same, opts);
  CHECK(res.degenerate);
  CHECK(res.points.norm() == 0.0);

  Eigen::MatrixXd x = Eigen::MatrixXd::Random(10, 3);
  opts.perplexity = 4;  // >= 10/3
  CHECK_THROWS_AS(tsne_embed(x, opts), std::invalid_argument);
}

TEST_CASE("silhouette score cases") {
  SUBCASE("two tight distant 1-D clusters") {
    Eigen::MatrixXd pts(4, 1);
    pts << 0.0, 0.1, 10.0, 10.1;
    CHECK(cluster_separation_score(pts, {0, 0, 1, 1}) > 0.95);
  }
  SUBCASE("identical points per label at nonzero distance score 1") {
    Eigen::MatrixXd pts(4, 2);
    pts << 1, 1, 1, 1, 5, 5, 5, 5;
    CHECK(cluster_separation_score(pts, {0, 0, 1, 1}) ==
          doctest::Approx(1.0));
  }
  SUBCASE("shuffled labels score near zero") {
    Rng rng(31);
    Eigen::MatrixXd pts(100, 2);
    for (int i = 0; i < pts.size(); ++i) pts.data()[i] = rng.normal();
    std::vector<int> labels(100);
    for (int i = 0; i < 100; ++i) labels[i] = i % 2;
    for (int trial = 0; trial < 100; ++trial) {
      // Fisher-Yates shuffle of the labels.
      for (int i = 99; i > 0; --i)
        std::swap(labels[i], labels[rng.uniform_int(0, i)]);
      REQUIRE(std::abs(cluster_separation_score(pts, labels)) < 0.1);
    }
  }
  SUBCASE("single label or tiny clusters are rejected") {
    Eigen::MatrixXd pts = Eigen::MatrixXd::Random(5, 2);
    CHECK_THROWS_AS(cluster_separation_score(pts, {1, 1, 1, 1, 1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(cluster_separation_score(pts, {0, 0, 0, 0, 1}),
                    std::invalid_argument);
  }
  SUBCASE("translation and rotation invariance") {
    Rng rng(33);
    Eigen::MatrixXd pts(40, 2);
    std::vector<int> labels(40);
    for (int i = 0; i < 40; ++i) {
      labels[i] = i % 2;
      pts(i, 0) = rng.normal() + labels[i] * 3.0;
      pts(i, 1) = rng.normal();
    }
    const double base = cluster_separation_score(pts, labels);
    const double angle = 0.83;
    Eigen::Matrix2d rot;
    rot << std::cos(angle), -std::sin(angle), std::sin(angle),
        std::cos(angle);
    Eigen::MatrixXd moved = pts * rot.transpose();
    moved.rowwise() += Eigen::RowVector2d(5.5, -2.0);
    CHECK(cluster_separation_score(moved, labels) ==
          doctest::Approx(base).epsilon(1e-9));
  }
}
