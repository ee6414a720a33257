#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "grid.hpp"

namespace viewshed {

enum class TerrainKind {
  FLAT,
  CONE_UP,
  CONE_DOWN,
  WALL,
  RANDOM_SMOOTH,
  RANDOM_IID,
};

inline const char* to_string(TerrainKind k) {
  switch (k) {
    case TerrainKind::FLAT: return "flat";
    case TerrainKind::CONE_UP: return "cone-up";
    case TerrainKind::CONE_DOWN: return "cone-down";
    case TerrainKind::WALL: return "wall";
    case TerrainKind::RANDOM_SMOOTH: return "random-smooth";
    case TerrainKind::RANDOM_IID: return "random-iid";
  }
  return "?";
}

inline TerrainKind terrain_kind_from_string(const std::string& s) {
  if (s == "flat") return TerrainKind::FLAT;
  if (s == "cone-up") return TerrainKind::CONE_UP;
  if (s == "cone-down") return TerrainKind::CONE_DOWN;
  if (s == "wall") return TerrainKind::WALL;
  if (s == "random-smooth") return TerrainKind::RANDOM_SMOOTH;
  if (s == "random-iid") return TerrainKind::RANDOM_IID;
  throw config_error("unknown terrain kind: " + s);
}

// Deterministic synthetic-terrain description. Identical specs generate
// bit-identical grids on every platform, which is why raw engine draws are
// mapped to doubles by hand below instead of going through
// std::uniform_real_distribution.
struct TerrainSpec {
  TerrainKind kind = TerrainKind::FLAT;
  int nrows = 0;
  int ncols = 0;
  std::uint64_t seed = 0;
  double cell_spacing = 1.0;

  double height = 0.0;     // FLAT constant; WALL base level
  double slope = 1.0;      // CONE_UP / CONE_DOWN rise per ring
  double amplitude = 1.0;  // RANDOM_* vertical scale
  int features = 12;       // RANDOM_SMOOTH bump count

  double wall_height = 10.0;  // WALL block level (absolute)
  int wall_row0 = 0, wall_col0 = 0;  // WALL block extent, inclusive
  int wall_row1 = -1, wall_col1 = -1;

  // Optional nodata damage, applied after the surface is built.
  int nodata_rects = 0;       // random rectangles punched to nodata
  double nodata_fraction = 0.0;  // iid per-cell nodata probability
};

namespace detail {

// Uniform double in [0,1) from the top 53 bits of one engine draw.
inline double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline int int_draw(std::mt19937_64& rng, int lo, int hi) {  // inclusive range
  return lo + static_cast<int>(unit_draw(rng) * static_cast<double>(hi - lo + 1));
}

inline void add_gaussian_bump(Grid& g, double ci, double cj, double sigma, double amp) {
  const double cut = 3.5 * sigma;
  int i0 = std::max(0, static_cast<int>(std::floor(ci - cut)));
  int i1 = std::min(g.nrows - 1, static_cast<int>(std::ceil(ci + cut)));
  int j0 = std::max(0, static_cast<int>(std::floor(cj - cut)));
  int j1 = std::min(g.ncols - 1, static_cast<int>(std::ceil(cj + cut)));
  if (i0 > i1 || j0 > j1) return;
  // Separable factors keep this O(window) exp calls, not O(window^2).
  std::vector<double> fi(static_cast<std::size_t>(i1 - i0 + 1));
  std::vector<double> fj(static_cast<std::size_t>(j1 - j0 + 1));
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  for (int i = i0; i <= i1; ++i) {
    double d = static_cast<double>(i) - ci;
    fi[static_cast<std::size_t>(i - i0)] = std::exp(-d * d * inv2s2);
  }
  for (int j = j0; j <= j1; ++j) {
    double d = static_cast<double>(j) - cj;
    fj[static_cast<std::size_t>(j - j0)] = std::exp(-d * d * inv2s2);
  }
  for (int i = i0; i <= i1; ++i) {
    double row = amp * fi[static_cast<std::size_t>(i - i0)];
    float* p = &g.at(i, j0);
    for (int j = j0; j <= j1; ++j)
      p[j - j0] += static_cast<float>(row * fj[static_cast<std::size_t>(j - j0)]);
  }
}

}  // namespace detail

inline Grid generate(const TerrainSpec& spec) {
  if (spec.nrows <= 0 || spec.ncols <= 0)
    throw config_error("terrain dimensions must be positive");
  Grid g(spec.nrows, spec.ncols, 0.0f, spec.cell_spacing);
  const int cr = (spec.nrows - 1) / 2;
  const int cc = (spec.ncols - 1) / 2;
  std::mt19937_64 rng(spec.seed);

  switch (spec.kind) {
    case TerrainKind::FLAT: {
      std::fill(g.values.begin(), g.values.end(),
                static_cast<float>(spec.height));
      break;
    }
    case TerrainKind::CONE_UP:
    case TerrainKind::CONE_DOWN: {
      const double s =
          spec.kind == TerrainKind::CONE_UP ? spec.slope : -spec.slope;
      for (int i = 0; i < g.nrows; ++i)
        for (int j = 0; j < g.ncols; ++j) {
          int r = ring_of(Viewpoint{cr, cc, 0.0}, i, j);
          g.at(i, j) = static_cast<float>(spec.height + s * r);
        }
      break;
    }
    case TerrainKind::WALL: {
      std::fill(g.values.begin(), g.values.end(),
                static_cast<float>(spec.height));
      int r1 = spec.wall_row1 < 0 ? spec.nrows - 1 : spec.wall_row1;
      int c1 = spec.wall_col1 < 0 ? spec.ncols - 1 : spec.wall_col1;
      for (int i = std::max(0, spec.wall_row0); i <= std::min(g.nrows - 1, r1); ++i)
        for (int j = std::max(0, spec.wall_col0); j <= std::min(g.ncols - 1, c1); ++j)
          g.at(i, j) = static_cast<float>(spec.wall_height);
      break;
    }
    case TerrainKind::RANDOM_SMOOTH: {
      std::fill(g.values.begin(), g.values.end(),
                static_cast<float>(spec.height));
      const double side = static_cast<double>(std::min(spec.nrows, spec.ncols));
      for (int b = 0; b < spec.features; ++b) {
        double ci = detail::unit_draw(rng) * static_cast<double>(spec.nrows - 1);
        double cj = detail::unit_draw(rng) * static_cast<double>(spec.ncols - 1);
        double sigma = (0.06 + 0.19 * detail::unit_draw(rng)) * side;
        double amp = (2.0 * detail::unit_draw(rng) - 1.0) * spec.amplitude;
        detail::add_gaussian_bump(g, ci, cj, sigma, amp);
      }
      break;
    }
    case TerrainKind::RANDOM_IID: {
      for (float& v : g.values)
        v = static_cast<float>(detail::unit_draw(rng) * spec.amplitude);
      break;
    }
  }

  if (spec.nodata_rects > 0) {
    for (int k = 0; k < spec.nodata_rects; ++k) {
      int h = detail::int_draw(rng, 1, std::max(1, spec.nrows / 8));
      int w = detail::int_draw(rng, 1, std::max(1, spec.ncols / 8));
      int i0 = detail::int_draw(rng, 0, spec.nrows - 1);
      int j0 = detail::int_draw(rng, 0, spec.ncols - 1);
      for (int i = i0; i < std::min(spec.nrows, i0 + h); ++i)
        for (int j = j0; j < std::min(spec.ncols, j0 + w); ++j)
          g.at(i, j) = g.nodata;
    }
  }
  if (spec.nodata_fraction > 0.0) {
    for (float& v : g.values)
      if (detail::unit_draw(rng) < spec.nodata_fraction) v = g.nodata;
  }
  return g;
}

}  // namespace viewshed
