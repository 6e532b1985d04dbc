#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace riser {

struct NamedTensor {
  std::string name;
  Eigen::MatrixXd value;
};

struct AdamSnapshot {
  bool present = false;
  long t = 0;
  std::vector<Eigen::MatrixXd> m, v;
};

struct RngState {
  std::array<std::uint64_t, 4> s{};
};

struct EnvSnapshot {
  int level = 0;
  RngState env_stream;
  RngState act_rng;
};

/// Versioned binary container for everything a run needs to resume:
/// parameters, optimizer moments, per-env curriculum levels and streams.
/// Round-trips are bit-exact.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::uint32_t schema_version = kVersion;
  std::uint64_t config_hash = 0;
  std::int64_t iteration = 0;
  bool baseline_mode = false;
  std::vector<NamedTensor> params;
  AdamSnapshot policy_adam;
  AdamSnapshot cenet_adam;
  std::vector<EnvSnapshot> envs;
  RngState trainer_rng;

  std::string to_bytes() const;
  static Checkpoint from_bytes(const std::string& bytes);

  void save(const std::string& path) const;
  /// Loads and verifies the config hash; a mismatch throws unless
  /// allow_mismatch. expected_hash = 0 skips the check.
  static Checkpoint load(const std::string& path,
                         std::uint64_t expected_hash = 0,
                         bool allow_mismatch = false);

  const NamedTensor* find(const std::string& name) const;
};

}  // namespace riser
