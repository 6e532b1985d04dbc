#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace riser {

/// Counter-free xoshiro256++ stream. All randomness in the project flows
/// through instances of this type so that trajectories, terrains and
/// training runs are reproducible bit-for-bit from their seeds, and the
/// four-word state serializes trivially into checkpoints.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double uniform();
  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Standard normal via Box-Muller (two uniforms per draw, no cached spare).
  double normal();
  /// true with probability p.
  bool bernoulli(double p);

  std::array<std::uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }

 private:
  std::array<std::uint64_t, 4> s_{};
};

/// SplitMix64 step; mutates the state word and returns the output.
std::uint64_t splitmix64(std::uint64_t& x);

/// Deterministic combination of seed words into one, for deriving
/// per-environment / per-trial streams from a global seed.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);

}  // namespace riser
