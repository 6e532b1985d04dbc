#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "riser/rng.hpp"
#include "riser/terrain.hpp"

using namespace riser;

namespace {
TerrainSpec spec_of(TerrainKind kind, int level, std::uint64_t seed) {
  TerrainSpec s;
  s.kind = kind;
  s.level = level;
  s.seed = seed;
  s.extent = 8.0;
  s.cell_size = 0.02;
  return s;
}
const TerrainConfig kTc{};
}  // namespace

TEST_CASE("curriculum height range follows the 10 cm per level rule") {
  CHECK(curriculum_height_range(0) == std::pair{0.0, 0.1});
  CHECK(curriculum_height_range(9).second == doctest::Approx(1.0));
  CHECK(curriculum_height_range(4).second == doctest::Approx(0.5));
  CHECK_THROWS_AS(curriculum_height_range(-1), std::invalid_argument);
  CHECK_THROWS_AS(curriculum_height_range(10), std::invalid_argument);
}

TEST_CASE("flat terrain is all zeros") {
  const Heightfield hf = generate_terrain(spec_of(TerrainKind::Flat, 5, 99), kTc);
  for (double h : hf.heights) CHECK(h == 0.0);
}

TEST_CASE("slope rise over run matches the level-mapped grade everywhere") {
  for (int level : {0, 9}) {
    const Heightfield hf =
        generate_terrain(spec_of(TerrainKind::Slope, level, 1), kTc);
    const double want =
        std::tan((10.0 + 20.0 * level / 9.0) * M_PI / 180.0);
    for (int i = 0; i + 1 < hf.size(); ++i) {
      const double grade = (hf.heights[i + 1] - hf.heights[i]) / hf.cell_size;
      REQUIRE(grade == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("rough terrain extremes stay inside the level noise bound") {
  for (int level : {0, 4, 9}) {
    const double amp = 0.5 * curriculum_height_range(level).second;
    double seen = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      const Heightfield hf =
          generate_terrain(spec_of(TerrainKind::Rough, level, seed), kTc);
      REQUIRE(hf.min_height() >= -amp - 1e-12);
      REQUIRE(hf.max_height() <= amp + 1e-12);
      seen = std::max({seen, -hf.min_height(), hf.max_height()});
    }
    // The bound is achievable, not just respected.
    CHECK(seen > 0.9 * amp);
  }
}

TEST_CASE("discrete blocks stay inside the curriculum range and reach it") {
  double top = 0.0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const Heightfield hf =
        generate_terrain(spec_of(TerrainKind::Discrete, 9, seed), kTc);
    REQUIRE(hf.min_height() >= 0.0);
    REQUIRE(hf.max_height() <= 1.0 + 1e-12);
    top = std::max(top, hf.max_height());
  }
  CHECK(top > 0.95);
}

TEST_CASE("stairs have the fixed tread and level-mapped riser") {
  const Heightfield hf =
      generate_terrain(spec_of(TerrainKind::Stairs, 9, 3), kTc);
  const double riser = 0.30 * std::tan(30.0 * M_PI / 180.0);
  // Distinct heights are multiples of the riser.
  for (double h : hf.heights) {
    const double steps = h / riser;
    REQUIRE(std::abs(steps - std::round(steps)) < 1e-9);
  }
  CHECK(hf.max_height() > riser * 20);  // many steps across 8 m
}

TEST_CASE("generation is a pure function of the spec") {
  const auto spec = spec_of(TerrainKind::Rough, 7, 1234);
  const Heightfield a = generate_terrain(spec, kTc);
  const Heightfield b = generate_terrain(spec, kTc);
  REQUIRE(a.heights.size() == b.heights.size());
  for (size_t i = 0; i < a.heights.size(); ++i)
    REQUIRE(a.heights[i] == b.heights[i]);  // bit identical
  const Heightfield c =
      generate_terrain(spec_of(TerrainKind::Rough, 7, 1235), kTc);
  CHECK(a.heights != c.heights);
}

TEST_CASE("difficulty is monotone for matched seeds") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    for (int level = 0; level < 9; ++level) {
      const auto lo =
          generate_terrain(spec_of(TerrainKind::Rough, level, seed), kTc);
      const auto hi =
          generate_terrain(spec_of(TerrainKind::Rough, level + 1, seed), kTc);
      const auto amp = [](const Heightfield& h) {
        return std::max(-h.min_height(), h.max_height());
      };
      CHECK(amp(hi) >= amp(lo) - 1e-12);
      const auto dlo =
          generate_terrain(spec_of(TerrainKind::Discrete, level, seed), kTc);
      const auto dhi =
          generate_terrain(spec_of(TerrainKind::Discrete, level + 1, seed), kTc);
      CHECK(dhi.max_height() >= dlo.max_height() - 1e-12);
      const auto slo =
          generate_terrain(spec_of(TerrainKind::Slope, level, seed), kTc);
      const auto shi =
          generate_terrain(spec_of(TerrainKind::Slope, level + 1, seed), kTc);
      CHECK(shi.heights.back() > slo.heights.back());
      const auto tlo =
          generate_terrain(spec_of(TerrainKind::Stairs, level, seed), kTc);
      const auto thi =
          generate_terrain(spec_of(TerrainKind::Stairs, level + 1, seed), kTc);
      CHECK(thi.max_height() > tlo.max_height());
    }
  }
}

TEST_CASE("height_at interpolates, clamps, and is Lipschitz") {
  const Heightfield hf =
      generate_terrain(spec_of(TerrainKind::Rough, 6, 77), kTc);
  // exact at samples
  for (int i : {0, 17, 200, hf.size() - 1})
    CHECK(hf.height_at(hf.origin_x + i * hf.cell_size) ==
          doctest::Approx(hf.heights[i]).epsilon(1e-12));
  // midpoint linearity
  const double mid = hf.origin_x + 10.5 * hf.cell_size;
  CHECK(hf.height_at(mid) ==
        doctest::Approx(0.5 * (hf.heights[10] + hf.heights[11])));
  // clamped outside
  CHECK(hf.height_at(hf.origin_x - 5.0) == hf.heights.front());
  CHECK(hf.height_at(hf.end_x() + 5.0) == hf.heights.back());
  // Lipschitz with the max adjacent slope
  double lip = 0.0;
  for (int i = 0; i + 1 < hf.size(); ++i)
    lip = std::max(lip,
                   std::abs(hf.heights[i + 1] - hf.heights[i]) / hf.cell_size);
  Rng rng(5);
  for (int k = 0; k < 2000; ++k) {
    const double x = rng.uniform(hf.origin_x, hf.end_x());
    const double d = rng.uniform(0.0, 0.02);
    REQUIRE(std::abs(hf.height_at(x + d) - hf.height_at(x)) <=
            lip * d + 1e-12);
  }
}

TEST_CASE("simple interpolation identity: 0.2/0.4 midpoint is 0.3") {
  Heightfield hf;
  hf.heights = {0.2, 0.4};
  hf.cell_size = 1.0;
  hf.origin_x = 0.0;
  CHECK(hf.height_at(0.5) == doctest::Approx(0.3));
}

TEST_CASE("heightmap_scan geometry") {
  const Heightfield flat = generate_terrain(spec_of(TerrainKind::Flat, 0, 0), kTc);
  const Eigen::VectorXd scan = heightmap_scan(flat, 4.0, 0.3, 11, 0.1);
  REQUIRE(scan.size() == 11);
  for (int i = 0; i < 11; ++i) CHECK(scan(i) == doctest::Approx(-0.3));

  // spans +-0.5 m at 11 points / 0.1 m spacing
  Heightfield ramp;
  ramp.cell_size = 0.02;
  ramp.origin_x = 0.0;
  ramp.heights.resize(401);
  for (int i = 0; i <= 400; ++i) ramp.heights[i] = 0.5 * (i * 0.02);
  const Eigen::VectorXd s2 = heightmap_scan(ramp, 4.0, 0.0, 11, 0.1);
  CHECK(s2(0) == doctest::Approx(0.5 * 3.5));
  CHECK(s2(10) == doctest::Approx(0.5 * 4.5));

  // over a step edge: two constant plateaus
  Heightfield step;
  step.cell_size = 0.02;
  step.origin_x = 0.0;
  step.heights.assign(401, 0.0);
  for (int i = 200; i <= 400; ++i) step.heights[i] = 0.4;
  const Eigen::VectorXd s3 = heightmap_scan(step, 4.0 - 0.05, 0.0, 11, 0.1);
  for (int i = 0; i < 5; ++i) CHECK(s3(i) == doctest::Approx(0.0));
  for (int i = 6; i < 11; ++i) CHECK(s3(i) == doctest::Approx(0.4));

  CHECK_THROWS_AS(heightmap_scan(flat, 0, 0, 10, 0.1), std::invalid_argument);
}

TEST_CASE("terrain file format round-trips bit-exactly") {
  const Heightfield hf =
      generate_terrain(spec_of(TerrainKind::Discrete, 3, 555), kTc);
  const std::string path = "test_terrain_roundtrip.txt";
  save_heightfield(hf, path);
  const Heightfield back = load_heightfield(path);
  CHECK(back.spec.kind == hf.spec.kind);
  CHECK(back.spec.level == hf.spec.level);
  CHECK(back.spec.seed == hf.spec.seed);
  CHECK(back.cell_size == hf.cell_size);
  REQUIRE(back.heights.size() == hf.heights.size());
  for (size_t i = 0; i < hf.heights.size(); ++i)
    REQUIRE(back.heights[i] == hf.heights[i]);
  std::filesystem::remove(path);

  CHECK_THROWS(heightfield_from_text("not-a-terrain v1 flat 0 0 0.02 3\n"));
  CHECK_THROWS(heightfield_from_text("riser-terrain v2 flat 0 0 0.02 3\n"));
  CHECK_THROWS(heightfield_from_text("riser-terrain v1 flat 0 0 0.02 5\n1\n2\n"));
}
