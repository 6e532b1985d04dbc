#include "riser/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "riser/io_util.hpp"
#include "riser/rng.hpp"

namespace riser {

TerrainKind terrain_kind_from_string(std::string_view s) {
  if (s == "flat") return TerrainKind::Flat;
  if (s == "rough") return TerrainKind::Rough;
  if (s == "discrete") return TerrainKind::Discrete;
  if (s == "slope") return TerrainKind::Slope;
  if (s == "stairs") return TerrainKind::Stairs;
  throw std::invalid_argument("unknown terrain kind: " + std::string(s));
}

std::string to_string(TerrainKind kind) {
  switch (kind) {
    case TerrainKind::Flat: return "flat";
    case TerrainKind::Rough: return "rough";
    case TerrainKind::Discrete: return "discrete";
    case TerrainKind::Slope: return "slope";
    case TerrainKind::Stairs: return "stairs";
  }
  return "?";
}

std::pair<double, double> curriculum_height_range(int level) {
  if (level < 0 || level > 9)
    throw std::invalid_argument("curriculum level must be in [0,9], got " +
                                std::to_string(level));
  return {0.0, 0.1 + 0.1 * level};
}

double Heightfield::height_at(double x) const {
  const double u = (x - origin_x) / cell_size;
  if (u <= 0) return heights.front();
  const int n = size();
  if (u >= n - 1) return heights.back();
  const int i = static_cast<int>(u);
  const double frac = u - i;
  return heights[i] * (1.0 - frac) + heights[i + 1] * frac;
}

double Heightfield::slope_at(double x) const {
  const double u = (x - origin_x) / cell_size;
  const int n = size();
  int i = static_cast<int>(std::floor(u));
  i = std::clamp(i, 0, n - 2);
  return (heights[i + 1] - heights[i]) / cell_size;
}

double Heightfield::min_height() const {
  return *std::min_element(heights.begin(), heights.end());
}

double Heightfield::max_height() const {
  return *std::max_element(heights.begin(), heights.end());
}

namespace {

void check_spec(const TerrainSpec& spec) {
  if (spec.level < 0 || spec.level > 9)
    throw std::invalid_argument("terrain level must be in [0,9]");
  if (spec.extent <= 0 || spec.cell_size <= 0)
    throw std::invalid_argument("terrain extent and cell_size must be > 0");
}

// Noise amplitude at a level: half the curriculum span, so level 9 reaches
// the +-0.5 m bound and the total span matches the level's height range.
double rough_amplitude(int level) {
  return 0.5 * curriculum_height_range(level).second;
}

double level_angle_rad(int level, const TerrainConfig& cfg) {
  const double deg = cfg.slope_min_deg +
                     (cfg.slope_max_deg - cfg.slope_min_deg) * (level / 9.0);
  return deg * M_PI / 180.0;
}

void generate_rough(Heightfield& hf, const TerrainConfig& cfg, Rng& rng) {
  const int level = hf.spec.level;
  const double amp = rough_amplitude(level);
  const double knot_dx = cfg.rough_correlation;
  const int n_knots = static_cast<int>(std::ceil(hf.spec.extent / knot_dx)) + 2;
  std::vector<double> knots(n_knots);
  for (auto& k : knots) k = amp * rng.uniform(-1.0, 1.0);
  // Cosine interpolation between knots: C1-smooth and never overshoots the
  // knot range, keeping the field inside [-amp, amp].
  for (int i = 0; i < hf.size(); ++i) {
    const double x = i * hf.cell_size / knot_dx;
    int k = static_cast<int>(x);
    k = std::min(k, n_knots - 2);
    const double t = x - k;
    const double w = 0.5 * (1.0 - std::cos(M_PI * t));
    hf.heights[i] = knots[k] * (1.0 - w) + knots[k + 1] * w;
  }
}

void generate_discrete(Heightfield& hf, const TerrainConfig& cfg, Rng& rng) {
  const double hi = curriculum_height_range(hf.spec.level).second;
  const int n_blocks =
      static_cast<int>(std::lround(hf.spec.extent * cfg.blocks_per_meter));
  for (int b = 0; b < n_blocks; ++b) {
    const double center = rng.uniform(0.0, hf.spec.extent);
    const double width = rng.uniform(cfg.block_width_min, cfg.block_width_max);
    const double height = rng.uniform(0.0, hi);
    const int i0 = std::max(
        0, static_cast<int>(std::ceil((center - width / 2) / hf.cell_size)));
    const int i1 = std::min(
        hf.size() - 1,
        static_cast<int>(std::floor((center + width / 2) / hf.cell_size)));
    for (int i = i0; i <= i1; ++i)
      hf.heights[i] = std::max(hf.heights[i], height);
  }
}

void generate_slope(Heightfield& hf, const TerrainConfig& cfg) {
  const double grade = std::tan(level_angle_rad(hf.spec.level, cfg));
  for (int i = 0; i < hf.size(); ++i)
    hf.heights[i] = grade * (i * hf.cell_size);
}

void generate_stairs(Heightfield& hf, const TerrainConfig& cfg) {
  const double riser =
      cfg.stair_tread * std::tan(level_angle_rad(hf.spec.level, cfg));
  for (int i = 0; i < hf.size(); ++i) {
    const double x = i * hf.cell_size;
    hf.heights[i] = riser * std::floor(x / cfg.stair_tread);
  }
}

}  // namespace

Heightfield generate_terrain(const TerrainSpec& spec,
                             const TerrainConfig& cfg) {
  check_spec(spec);
  Heightfield hf;
  hf.spec = spec;
  hf.cell_size = spec.cell_size;
  hf.origin_x = 0.0;
  const int n = static_cast<int>(std::floor(spec.extent / spec.cell_size)) + 1;
  hf.heights.assign(std::max(n, 2), 0.0);

  // The level is deliberately not mixed in: matched seeds draw the same
  // noise/block layout so difficulty scales monotonically with the level.
  Rng rng(mix_seed({spec.seed, static_cast<std::uint64_t>(spec.kind)}));
  switch (spec.kind) {
    case TerrainKind::Flat: break;
    case TerrainKind::Rough: generate_rough(hf, cfg, rng); break;
    case TerrainKind::Discrete: generate_discrete(hf, cfg, rng); break;
    case TerrainKind::Slope: generate_slope(hf, cfg); break;
    case TerrainKind::Stairs: generate_stairs(hf, cfg); break;
  }
  return hf;
}

Eigen::VectorXd heightmap_scan(const Heightfield& hf, double base_x,
                               double base_z, int n_points, double spacing) {
  if (n_points < 1 || n_points % 2 == 0)
    throw std::invalid_argument("heightmap_scan: n_points must be odd");
  Eigen::VectorXd scan(n_points);
  const int half = (n_points - 1) / 2;
  for (int k = -half; k <= half; ++k)
    scan(k + half) = hf.height_at(base_x + k * spacing) - base_z;
  return scan;
}

std::string heightfield_to_text(const Heightfield& hf) {
  std::ostringstream out;
  out << "riser-terrain v1 " << to_string(hf.spec.kind) << " "
      << hf.spec.level << " " << hf.spec.seed << " "
      << format_double(hf.cell_size) << " " << hf.size() << "\n";
  for (double h : hf.heights) out << format_double(h) << "\n";
  return out.str();
}

Heightfield heightfield_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string tag, ver, kind;
  Heightfield hf;
  int n = 0;
  in >> tag >> ver >> kind >> hf.spec.level >> hf.spec.seed >>
      hf.cell_size >> n;
  if (!in || tag != "riser-terrain" || ver != "v1")
    throw std::runtime_error("not a riser-terrain v1 file");
  if (n < 2 || hf.cell_size <= 0)
    throw std::runtime_error("riser-terrain: malformed header");
  hf.spec.kind = terrain_kind_from_string(kind);
  hf.spec.cell_size = hf.cell_size;
  hf.spec.extent = (n - 1) * hf.cell_size;
  hf.origin_x = 0.0;
  hf.heights.resize(n);
  for (int i = 0; i < n; ++i) {
    if (!(in >> hf.heights[i]))
      throw std::runtime_error("riser-terrain: truncated elevation data");
    if (!std::isfinite(hf.heights[i]))
      throw std::runtime_error("riser-terrain: non-finite elevation");
  }
  return hf;
}

void save_heightfield(const Heightfield& hf, const std::string& path) {
  atomic_write_file(path, heightfield_to_text(hf));
}

Heightfield load_heightfield(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open terrain file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return heightfield_from_text(buf.str());
}

}  // namespace riser
