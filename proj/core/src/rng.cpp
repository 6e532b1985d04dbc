#include "riser/rng.hpp"

#include <cmath>

namespace riser {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t x = 0x8e12fca98d5c31a7ULL;
  for (std::uint64_t p : parts) {
    x ^= splitmix64(p) + 0x9e3779b97f4a7c15ULL + (x << 6) + (x >> 2);
    splitmix64(x);
  }
  return splitmix64(x);
}

Rng::Rng(std::uint64_t seed) {
  // xoshiro state must not be all-zero; splitmix64 seeding guarantees that.
  std::uint64_t x = seed;
  for (auto& w : s_) w = splitmix64(x);
}

static inline std::uint64_t rotl(std::uint64_t v, int k) {
  return (v << k) | (v >> (64 - k));
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  // Multiply-shift bounded draw; bias is < 2^-64, irrelevant at our scales.
  const unsigned __int128 m =
      static_cast<unsigned __int128>(next_u64()) * span;
  return lo + static_cast<std::int64_t>(m >> 64);
}

double Rng::normal() {
  // Box-Muller, cosine branch only: stateless apart from the stream itself.
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

}  // namespace riser
