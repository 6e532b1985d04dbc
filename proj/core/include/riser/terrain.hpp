#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "riser/config.hpp"

namespace riser {

enum class TerrainKind { Flat, Rough, Discrete, Slope, Stairs };

TerrainKind terrain_kind_from_string(std::string_view s);
std::string to_string(TerrainKind kind);

struct TerrainSpec {
  TerrainKind kind = TerrainKind::Flat;
  int level = 0;  // difficulty, 0..9
  std::uint64_t seed = 0;
  double extent = 8.0;     // m
  double cell_size = 0.02;  // m
};

/// Sampled 1-D elevation profile. Immutable after generation; safe to share
/// across workers.
struct Heightfield {
  std::vector<double> heights;
  double cell_size = 0.02;
  double origin_x = 0.0;
  TerrainSpec spec;

  int size() const { return static_cast<int>(heights.size()); }
  double end_x() const { return origin_x + (size() - 1) * cell_size; }

  /// Linear interpolation between bracketing samples; clamps outside the
  /// field so queries are total.
  double height_at(double x) const;
  /// Slope of the interpolated surface at x (piecewise constant).
  double slope_at(double x) const;

  double min_height() const;
  double max_height() const;
};

/// Terrain height range [min,max] for a curriculum level: [0, 0.1 + 0.1*level].
/// Throws std::invalid_argument outside 0..9.
std::pair<double, double> curriculum_height_range(int level);

/// Deterministic procedural generation; a pure function of (spec, cfg).
Heightfield generate_terrain(const TerrainSpec& spec, const TerrainConfig& cfg);

/// Elevations at base_x + k*spacing for k in [-(n-1)/2, (n-1)/2], each
/// relative to base_z (terrain minus base height). n_points must be odd.
Eigen::VectorXd heightmap_scan(const Heightfield& hf, double base_x,
                               double base_z, int n_points, double spacing);

/// Plain-text grid format, header:
///   riser-terrain v1 <kind> <level> <seed> <cell_size> <n>
/// followed by one elevation per line (decimal meters).
void save_heightfield(const Heightfield& hf, const std::string& path);
Heightfield load_heightfield(const std::string& path);
std::string heightfield_to_text(const Heightfield& hf);
Heightfield heightfield_from_text(const std::string& text);

}  // namespace riser
