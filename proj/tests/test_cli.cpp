#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "riser/io_util.hpp"
#include "riser/terrain.hpp"

namespace fs = std::filesystem;

namespace {

std::string bin() {
  const char* b = std::getenv("RISER_BIN");
  REQUIRE_MESSAGE(b != nullptr, "RISER_BIN must point at the riser binary");
  return b;
}

int run(const std::string& args) {
  const std::string cmd = bin() + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::path("cli_tmp") / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const {
    return (path / f).string();
  }
};

void write_tiny_config(const std::string& path) {
  std::ofstream out(path);
  out << "seed = 9\n"
         "[ppo]\n"
         "n_envs = 2\n"
         "rollout_steps = 4\n"
         "minibatches = 1\n"
         "epochs = 1\n"
         "iterations = 2\n"
         "checkpoint_every = 2\n"
         "[nets]\n"
         "actor_hidden = [12]\n"
         "critic_hidden = [12]\n"
         "cenet_hidden = [12]\n"
         "decoder_hidden = [12]\n"
         "latent_dim = 3\n"
         "[env]\n"
         "terrain_kinds = [\"flat\"]\n"
         "[eval]\n"
         "latent_kinds = [\"flat\", \"rough\"]\n"
         "latent_episodes = 1\n";
}

}  // namespace

TEST_CASE("unknown subcommand exits 2") { CHECK(run("frobnicate") == 2); }

TEST_CASE("terrain subcommand emits the v1 grid format") {
  TempDir tmp("terrain");
  const std::string out = tmp / "t.txt";
  CHECK(run("terrain --kind slope --level 9 --seed 1 --out " + out) == 0);
  const riser::Heightfield hf = riser::load_heightfield(out);
  CHECK(hf.spec.kind == riser::TerrainKind::Slope);
  CHECK(hf.spec.level == 9);
  CHECK(hf.heights.size() >= 2);

  // Identical invocation gives identical bytes.
  const std::string out2 = tmp / "t2.txt";
  CHECK(run("terrain --kind slope --level 9 --seed 1 --out " + out2) == 0);
  CHECK(riser::read_file(out) == riser::read_file(out2));

  CHECK(run("terrain --kind slope --level 12 --seed 1 --out " + out) == 1);
}

TEST_CASE("train, eval, latents, tsne, replay pipeline") {
  TempDir tmp("pipeline");
  const std::string cfg = tmp / "c.toml";
  write_tiny_config(cfg);
  const std::string rundir = tmp / "run";

  REQUIRE(run("train --config " + cfg + " --out " + rundir) == 0);
  CHECK(fs::exists(rundir + "/config.snapshot"));
  CHECK(fs::exists(rundir + "/metrics.csv"));
  CHECK(fs::exists(rundir + "/ckpt-latest"));
  CHECK_FALSE(fs::exists(rundir + "/.lock"));  // released on exit

  const std::string ckpt = rundir + "/ckpt-latest";
  const std::string results = tmp / "results.csv";
  REQUIRE(run("eval --ckpt " + ckpt + " --kind flat --levels 0..1 --robots 2 "
              "--seeds 2 --out " + results) == 0);
  {
    const std::string csv = riser::read_file(results);
    CHECK(csv.find("# config_hash ") == 0);
    CHECK(csv.find("kind,level,seed,success_rate") != std::string::npos);
    CHECK(csv.find("flat,1,1,") != std::string::npos);
  }

  const std::string latents = tmp / "latents.csv";
  REQUIRE(run("latents --ckpt " + ckpt + " --out " + latents) == 0);
  const std::string embed = tmp / "embed.csv";
  REQUIRE(run("tsne --in " + latents +
              " --perplexity 20 --iterations 60 --out " + embed) == 0);
  {
    const std::string csv = riser::read_file(embed);
    CHECK(csv.find("x,y,kind,level,tick") != std::string::npos);
  }

  // A second identical training run reproduces metrics.csv byte-for-byte.
  const std::string rundir2 = tmp / "run2";
  REQUIRE(run("train --config " + cfg + " --out " + rundir2) == 0);
  CHECK(riser::read_file(rundir + "/metrics.csv") ==
        riser::read_file(rundir2 + "/metrics.csv"));
  CHECK(riser::read_file(rundir + "/ckpt-latest") ==
        riser::read_file(rundir2 + "/ckpt-latest"));

  // Replay twice: byte-identical traces.
  const std::string tr1 = tmp / "trace1.txt";
  const std::string tr2 = tmp / "trace2.txt";
  REQUIRE(run("replay --ckpt " + ckpt + " --seed 7 --kind rough --level 2 "
              "--out " + tr1) == 0);
  REQUIRE(run("replay --ckpt " + ckpt + " --seed 7 --kind rough --level 2 "
              "--out " + tr2) == 0);
  CHECK(riser::read_file(tr1) == riser::read_file(tr2));

  // Config-hash guard: evaluating under a different config is refused
  // without the override flag.
  const std::string cfg2 = tmp / "c2.toml";
  write_tiny_config(cfg2);
  std::ofstream(cfg2, std::ios::app) << "[sim]\nkp = 29\n";
  CHECK(run("eval --ckpt " + ckpt + " --config " + cfg2 +
            " --kind flat --levels 0 --robots 1 --seeds 1 --out " +
            (tmp / "r2.csv")) == 1);
  CHECK(run("eval --ckpt " + ckpt + " --config " + cfg2 +
            " --allow-config-mismatch --kind flat --levels 0 --robots 1 "
            "--seeds 1 --out " + (tmp / "r2.csv")) == 0);
}

TEST_CASE("run directory lock blocks concurrent training") {
  TempDir tmp("lock");
  const std::string cfg = tmp / "c.toml";
  write_tiny_config(cfg);
  const std::string rundir = tmp / "run";
  fs::create_directories(rundir);
  std::ofstream(rundir + "/.lock") << "held\n";
  CHECK(run("train --config " + cfg + " --out " + rundir) == 1);
}
