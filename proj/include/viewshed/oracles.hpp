#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "geometry.hpp"
#include "grid.hpp"

// Brute-force reference implementations. Every production algorithm in this
// library is validated against these; they favor directness over speed and
// share the per-point projection and tie rules with the fast paths so
// comparisons are exact, not approximate.

namespace viewshed {

namespace detail {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

// Sign of za*wa + zb*wb - zp*wp for non-negative integer weights. Each
// product is exact in quad precision and the single rounded sum leaves the
// sign exact unless the local relief spans ~2^34 in magnitude, so integer
// terrains (and every hand-frozen example) compare with zero drift.
inline int crossing_sign(double za, std::int64_t wa, double zb, std::int64_t wb,
                         double zp, std::int64_t wp) {
  __float128 s = static_cast<__float128>(za) * static_cast<__float128>(wa) +
                 static_cast<__float128>(zb) * static_cast<__float128>(wb) -
                 static_cast<__float128>(zp) * static_cast<__float128>(wp);
  return s > 0 ? 1 : (s < 0 ? -1 : 0);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear-interpolation sightline oracle. Walks every crossing of the
// sightline with grid lines (GRIDLINES) or with the concentric rings only
// (LAYERS) and interpolates the terrain there. Crossing positions are exact
// rationals over the integer grid, so each occlusion test reduces to the
// sign of za*wa + zb*wb - zp*wp with integer weights: no screen-space
// arithmetic and no epsilon drift. A crossing occludes only if its vertical
// angle strictly exceeds the target's; `strict_occlusion` flips ties to
// occluding for sensitivity runs. Crossings on an edge with a nodata
// endpoint are transparent.
// ---------------------------------------------------------------------------
template <typename T>
inline bool r3_point_visible(const BasicGrid<T>& g, const Viewpoint& v, int pi,
                             int pj, Model model, bool strict_occlusion = false) {
  if (pi == v.row && pj == v.col) return true;
  const double eye_z = eye_elevation(g, v);
  const double zp = static_cast<double>(g.at(pi, pj)) - eye_z;
  const std::int64_t dpx = pj - v.col;  // eastings
  const std::int64_t dpy = v.row - pi;  // northings
  const std::int64_t dP = std::abs(dpx) + std::abs(dpy);  // target L1 distance

  const auto occludes = [&](int sign) {
    return strict_occlusion ? sign >= 0 : sign > 0;
  };
  // Interpolated crossing on the grid edge a-b at parameter r/den from a,
  // at L1 distance dnum/den from v, against the target at distance dP:
  //   (za*(den-r) + zb*r) / den / (dnum/den)  vs  zp / dP
  // which clears to integer-weighted products on both sides.
  const auto edge_blocks = [&](int ai, int aj, int bi, int bj, std::int64_t r,
                               std::int64_t den, std::int64_t dnum) {
    if (g.nodata_at(ai, aj) || g.nodata_at(bi, bj)) return false;
    double za = static_cast<double>(g.at(ai, aj)) - eye_z;
    double zb = static_cast<double>(g.at(bi, bj)) - eye_z;
    return occludes(
        detail::crossing_sign(za, (den - r) * dP, zb, r * dP, zp, dnum));
  };
  // A crossing that lands exactly on a grid point, at distance (s/steps)*dP.
  const auto point_blocks = [&](int i, int j, std::int64_t s,
                                std::int64_t steps) {
    if (g.nodata_at(i, j)) return false;
    double zq = static_cast<double>(g.at(i, j)) - eye_z;
    return occludes(detail::crossing_sign(zq, steps, 0.0, 0, zp, s));
  };

  if (model == Model::LAYERS) {
    // The sightline leaves ring l through the side matching its dominant
    // axis (the corner exactly, for diagonal targets); that crossing is the
    // grid-line crossing at x = +-l or y = +-l, evaluated identically.
    const int L = ring_of(v, pi, pj);
    const bool x_major = std::abs(dpx) >= std::abs(dpy);
    const std::int64_t den = x_major ? std::abs(dpx) : std::abs(dpy);
    const std::int64_t minor = x_major ? dpy : dpx;
    for (int l = 1; l < L; ++l) {
      std::int64_t num = l * minor;
      std::int64_t lo = detail::floor_div(num, den);
      std::int64_t r = num - lo * den;
      std::int64_t dnum = l * den + std::abs(num);  // crossing L1 * den
      if (x_major) {
        int j = v.col + static_cast<int>(dpx > 0 ? l : -l);
        int ia = v.row - static_cast<int>(lo);
        if (r == 0) {
          if (point_blocks(ia, j, dnum, den * dP)) return false;
        } else if (edge_blocks(ia, j, ia - 1, j, r, den, dnum)) {
          return false;
        }
      } else {
        int i = v.row - static_cast<int>(dpy > 0 ? l : -l);
        int ja = v.col + static_cast<int>(lo);
        if (r == 0) {
          if (point_blocks(i, ja, dnum, den * dP)) return false;
        } else if (edge_blocks(i, ja, i, ja + 1, r, den, dnum)) {
          return false;
        }
      }
    }
    return true;
  }

  // Lattice points exactly on the sightline.
  const std::int64_t steps = std::gcd(std::abs(dpx), std::abs(dpy));
  for (std::int64_t s = 1; s < steps; ++s) {
    int i = v.row - static_cast<int>(s * dpy / steps);
    int j = v.col + static_cast<int>(s * dpx / steps);
    if (point_blocks(i, j, s, steps)) return false;
  }
  // Crossings with north-south grid lines (skipping lattice hits).
  if (dpx != 0) {
    const std::int64_t sx = dpx > 0 ? 1 : -1;
    const std::int64_t den = std::abs(dpx);
    for (std::int64_t k = sx; k != dpx; k += sx) {
      std::int64_t num = sx * k * dpy;  // y* = num/den at column offset k
      if (num % den == 0) continue;
      std::int64_t lo = detail::floor_div(num, den);
      std::int64_t r = num - lo * den;
      int j = v.col + static_cast<int>(k);
      int ia = v.row - static_cast<int>(lo);
      if (edge_blocks(ia, j, ia - 1, j, r, den, std::abs(k) * den + std::abs(num)))
        return false;
    }
  }
  // Crossings with east-west grid lines (skipping lattice hits).
  if (dpy != 0) {
    const std::int64_t sy = dpy > 0 ? 1 : -1;
    const std::int64_t den = std::abs(dpy);
    for (std::int64_t m = sy; m != dpy; m += sy) {
      std::int64_t num = sy * m * dpx;  // x* = num/den at row offset m
      if (num % den == 0) continue;
      std::int64_t lo = detail::floor_div(num, den);
      std::int64_t r = num - lo * den;
      int i = v.row - static_cast<int>(m);
      int ja = v.col + static_cast<int>(lo);
      if (edge_blocks(i, ja, i, ja + 1, r, den, std::abs(m) * den + std::abs(num)))
        return false;
    }
  }
  return true;
}

template <typename T>
inline VisibilityGrid r3_viewshed(const BasicGrid<T>& g, const Viewpoint& v,
                                  Model model, bool strict_occlusion = false) {
  validate_viewpoint(g, v);
  VisibilityGrid out(g.nrows, g.ncols);
  for (int i = 0; i < g.nrows; ++i)
    for (int j = 0; j < g.ncols; ++j) {
      if (g.nodata_at(i, j)) {
        out.at(i, j) = Flag::NODATA;
        continue;
      }
      out.at(i, j) = r3_point_visible(g, v, i, j, model, strict_occlusion)
                         ? Flag::VISIBLE
                         : Flag::INVISIBLE;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Unit-cell sightline oracle. Each grid point owns a 1x1 cell of constant
// elevation key; the target is occluded iff some other cell properly
// intersecting the open segment to it has key >= the target's (ties
// occlude). Single-corner grazing contact never occludes; nodata cells are
// transparent.
// ---------------------------------------------------------------------------
template <typename T>
inline bool vk_point_visible(const BasicGrid<T>& g, const Viewpoint& v, int pi,
                             int pj) {
  if (pi == v.row && pj == v.col) return true;
  const double eye_z = eye_elevation(g, v);
  const double key_p = elev_key(static_cast<double>(g.at(pi, pj)) - eye_z,
                                dist2_of(v, pi, pj), g.cell_spacing);

  const auto blocks = [&](int qi, int qj) {
    if ((qi == pi && qj == pj) || (qi == v.row && qj == v.col)) return false;
    if (!g.in_grid(qi, qj) || g.nodata_at(qi, qj)) return false;
    double key_q = elev_key(static_cast<double>(g.at(qi, qj)) - eye_z,
                            dist2_of(v, qi, qj), g.cell_spacing);
    if (key_q < key_p) return false;
    return segment_cell_contact(v, pi, pj, qi, qj) == CellContact::PROPER;
  };

  const int dpx = pj - v.col;
  const int dpy = v.row - pi;
  if (std::abs(dpx) >= std::abs(dpy)) {
    const int sx = dpx > 0 ? 1 : -1;
    const double slope = static_cast<double>(dpy) / static_cast<double>(dpx);
    for (int x = 0; x != dpx + sx; x += sx) {
      // Candidate rows: the segment's y-range over this column's slab,
      // padded by one; the exact contact test filters.
      double ya = slope * (static_cast<double>(x) - 0.5 * sx);
      double yb = slope * (static_cast<double>(x) + 0.5 * sx);
      if (ya > yb) std::swap(ya, yb);
      int rlo = static_cast<int>(std::floor(ya - 0.5)) - 1;
      int rhi = static_cast<int>(std::ceil(yb + 0.5)) + 1;
      for (int y = rlo; y <= rhi; ++y)
        if (blocks(v.row - y, v.col + x)) return false;
    }
  } else {
    const int sy = dpy > 0 ? 1 : -1;
    const double slope = static_cast<double>(dpx) / static_cast<double>(dpy);
    for (int y = 0; y != dpy + sy; y += sy) {
      double xa = slope * (static_cast<double>(y) - 0.5 * sy);
      double xb = slope * (static_cast<double>(y) + 0.5 * sy);
      if (xa > xb) std::swap(xa, xb);
      int clo = static_cast<int>(std::floor(xa - 0.5)) - 1;
      int chi = static_cast<int>(std::ceil(xb + 0.5)) + 1;
      for (int x = clo; x <= chi; ++x)
        if (blocks(v.row - y, v.col + x)) return false;
    }
  }
  return true;
}

template <typename T>
inline VisibilityGrid vk_viewshed(const BasicGrid<T>& g, const Viewpoint& v) {
  validate_viewpoint(g, v);
  VisibilityGrid out(g.nrows, g.ncols);
  for (int i = 0; i < g.nrows; ++i)
    for (int j = 0; j < g.ncols; ++j) {
      if (g.nodata_at(i, j)) {
        out.at(i, j) = Flag::NODATA;
        continue;
      }
      out.at(i, j) =
          vk_point_visible(g, v, i, j) ? Flag::VISIBLE : Flag::INVISIBLE;
    }
  return out;
}

}  // namespace viewshed
