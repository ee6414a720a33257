#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

#include "grid.hpp"

namespace viewshed {

// Interpolation model for the linear-surface algorithms. The VK sweep has a
// fixed cell model and takes no Model parameter.
enum class Model {
  GRIDLINES,  // test every grid-line crossing of the sightline
  LAYERS,     // test only the concentric-ring crossings
};

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

// ---------------------------------------------------------------------------
// Doubled integer coordinates.
//
// A cell center at offset (dx, dy) from the viewpoint (dx east, dy north, in
// grid units) is stored as (2dx, 2dy); its four unit-square corners are the
// odd pairs (2dx±1, 2dy±1). Centers are even, corners odd, so a sightline
// between two centers never passes through a third cell's corner ambiguously:
// every containment test below is exact in 64-bit integers.
// ---------------------------------------------------------------------------

// Total order on directions around the viewpoint: counterclockwise from due
// east, with one extra pre-east bucket (quadrant -1) for the entry corners of
// cells on the viewpoint's eastern half-row, which sort before azimuth 0.
struct AzimuthKey {
  std::int8_t quadrant = 0;  // -1, 0, 1, 2, 3
  std::int32_t x = 0;        // doubled coordinates, never (0, 0)
  std::int32_t y = 0;
};

inline std::int8_t azimuth_quadrant(std::int32_t x, std::int32_t y) {
  if (x > 0 && y >= 0) return 0;
  if (x <= 0 && y > 0) return 1;
  if (x < 0 && y <= 0) return 2;
  return 3;  // x >= 0, y < 0
}

inline AzimuthKey make_azimuth_key(std::int32_t x, std::int32_t y) {
  return AzimuthKey{azimuth_quadrant(x, y), x, y};
}

// cross > 0 means b is counterclockwise of a within one quadrant.
inline int compare_azimuth(const AzimuthKey& a, const AzimuthKey& b) {
  if (a.quadrant != b.quadrant) return a.quadrant < b.quadrant ? -1 : 1;
  std::int64_t cross = static_cast<std::int64_t>(a.x) * b.y -
                       static_cast<std::int64_t>(a.y) * b.x;
  if (cross > 0) return -1;
  if (cross < 0) return 1;
  return 0;
}

inline bool operator<(const AzimuthKey& a, const AzimuthKey& b) {
  return compare_azimuth(a, b) < 0;
}
inline bool operator==(const AzimuthKey& a, const AzimuthKey& b) {
  return compare_azimuth(a, b) == 0;
}

// Angle in radians: [0, 2pi) for quadrants 0..3, negative for quadrant -1.
inline double azimuth_radians(const AzimuthKey& k) {
  double a = std::atan2(static_cast<double>(k.y), static_cast<double>(k.x));
  if (k.quadrant < 0) return a;  // in [-pi/4, 0)
  if (a < 0.0) a += kTwoPi;
  return a;
}

// ---------------------------------------------------------------------------
// Sweep events.
// ---------------------------------------------------------------------------

// Tie order at equal azimuth: EXIT, then CENTER, then ENTER. A cell whose
// entry corner lies exactly on the sightline of a center is touching that
// sightline at a single point only, and single-point contact does not
// occlude, so the center must be handled before the cell becomes active;
// symmetrically an exit corner on the sightline must deactivate first.
enum class EventType : std::uint8_t {
  EXIT = 0,
  CENTER = 1,
  ENTER = 2,
};

struct Event {
  AzimuthKey azimuth;
  EventType type;
  std::int32_t dist2;  // squared center distance in grid units
  std::int32_t i, j;   // grid position
};

inline bool event_less(const Event& a, const Event& b) {
  int c = compare_azimuth(a.azimuth, b.azimuth);
  if (c != 0) return c < 0;
  if (a.type != b.type) return a.type < b.type;
  if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
  if (a.i != b.i) return a.i < b.i;
  return a.j < b.j;
}

struct CellEvents {
  Event enter, center, exit;
};

inline std::int32_t dist2_of(const Viewpoint& v, int i, int j) {
  std::int32_t dx = j - v.col;
  std::int32_t dy = v.row - i;
  return dx * dx + dy * dy;
}

// The three events of cell (i, j) != v. Entry is the clockwise-most corner,
// exit the counterclockwise-most. Cells on the viewpoint's eastern half-row
// straddle azimuth 0; their entry corner is assigned the pre-east bucket so
// that a full sweep starting at azimuth 0 has them active from the start.
inline CellEvents cell_events(const Viewpoint& v, int i, int j) {
  std::int32_t dx = j - v.col;
  std::int32_t dy = v.row - i;
  std::int32_t cx = 2 * dx, cy = 2 * dy;
  std::int32_t d2 = dx * dx + dy * dy;
  CellEvents ev;
  ev.center = Event{make_azimuth_key(cx, cy), EventType::CENTER, d2, i, j};
  if (dy == 0 && dx > 0) {
    ev.enter = Event{AzimuthKey{-1, cx - 1, -1}, EventType::ENTER, d2, i, j};
    ev.exit = Event{make_azimuth_key(cx - 1, 1), EventType::EXIT, d2, i, j};
    return ev;
  }
  AzimuthKey lo = make_azimuth_key(cx - 1, cy - 1);
  AzimuthKey hi = lo;
  const std::array<std::pair<std::int32_t, std::int32_t>, 3> rest = {
      std::make_pair(cx + 1, cy - 1), std::make_pair(cx - 1, cy + 1),
      std::make_pair(cx + 1, cy + 1)};
  for (auto [x, y] : rest) {
    AzimuthKey k = make_azimuth_key(x, y);
    if (k < lo) lo = k;
    if (hi < k) hi = k;
  }
  ev.enter = Event{lo, EventType::ENTER, d2, i, j};
  ev.exit = Event{hi, EventType::EXIT, d2, i, j};
  return ev;
}

// ---------------------------------------------------------------------------
// Elevation key: the monotone stand-in for the vertical angle of a point at
// height dz above the eye and squared horizontal distance d2 (grid units).
// key = sign(dz) * dz^2 / (d2 * spacing^2); comparing keys is equivalent to
// comparing angles, with no square roots or trigonometry involved.
// ---------------------------------------------------------------------------
inline double elev_key(double dz, std::int64_t d2_grid, double spacing) {
  double q = dz * dz / (static_cast<double>(d2_grid) * spacing * spacing);
  return dz < 0.0 ? -q : q;
}

// ---------------------------------------------------------------------------
// Screen projection: directions map to t in [0, 4), increasing clockwise
// from due east (t=0 east, 1 south, 2 west, 3 north); heights map to
// h = dz / L1-distance. Along any fixed t, h is a strictly increasing
// function of the vertical angle, and for points on one straight sightline
// segment h is linear in t, so upper envelopes of projected segments are
// exactly horizons. x, y are true-unit eastings/northings relative to the
// viewpoint; z is height above the eye.
// ---------------------------------------------------------------------------
struct ScreenPoint {
  double t = 0.0;
  double h = 0.0;
};

inline ScreenPoint screen_project(double x, double y, double z) {
  double den = std::abs(x) + std::abs(y);
  ScreenPoint p;
  p.t = (y <= 0.0) ? 1.0 - x / den : 3.0 + x / den;
  p.h = z / den;
  return p;
}

// Projection of grid point (i, j) relative to viewpoint v with eye height
// eye_z. Every consumer (oracles, horizon builders, classifiers) projects
// through this one function so their heights agree to the last bit.
template <typename T>
inline ScreenPoint project_grid_point(const BasicGrid<T>& g, const Viewpoint& v,
                                      double eye_z, int i, int j) {
  double x = static_cast<double>(j - v.col) * g.cell_spacing;
  double y = static_cast<double>(v.row - i) * g.cell_spacing;
  double z = static_cast<double>(g.at(i, j)) - eye_z;
  return screen_project(x, y, z);
}

// Height of the segment a-b at screen coordinate t (a.t <= t <= b.t,
// a.t < b.t). Shared by envelope evaluation and the crossing oracles.
inline double lerp_h(const ScreenPoint& a, const ScreenPoint& b, double t) {
  return a.h + (b.h - a.h) * ((t - a.t) / (b.t - a.t));
}

// ---------------------------------------------------------------------------
// Ring traversal. Ring l (l >= 1) around v has 8l lattice positions; index
// k in [0, 8l) walks them in strictly increasing screen-t order: due east
// first, then clockwise through south, west, north, ending just above due
// east. Positions may fall outside the grid; callers clip.
// ---------------------------------------------------------------------------
struct RingPos {
  int i, j;
};

inline RingPos ring_point(const Viewpoint& v, int l, int k) {
  // Walk segments: east side down (l+1 points incl. corner), south side
  // westward (2l), west side up (2l), north side eastward (2l), east side
  // upper part (l-1).
  if (k <= l) return RingPos{v.row + k, v.col + l};
  if (k <= 3 * l) return RingPos{v.row + l, v.col + l - (k - l)};
  if (k <= 5 * l) return RingPos{v.row + l - (k - 3 * l), v.col - l};
  if (k <= 7 * l) return RingPos{v.row - l, v.col - l + (k - 5 * l)};
  return RingPos{v.row - l + (k - 7 * l), v.col + l};
}

template <typename Fn>
inline void ring_walk(const Viewpoint& v, int l, Fn&& fn) {
  if (l == 0) {
    fn(v.row, v.col);
    return;
  }
  for (int k = 0; k < 8 * l; ++k) {
    RingPos p = ring_point(v, l, k);
    fn(p.i, p.j);
  }
}

// ---------------------------------------------------------------------------
// Square-tile distance: the smallest ring index reached by an axis-aligned
// tile [row0..row1] x [col0..col1] (inclusive), 0 when the tile contains v.
// ---------------------------------------------------------------------------
inline int interval_dist(int x, int lo, int hi) {
  if (x < lo) return lo - x;
  if (x > hi) return x - hi;
  return 0;
}

inline int tile_dist(const Viewpoint& v, int row0, int col0, int row1, int col1) {
  int dr = interval_dist(v.row, row0, row1);
  int dc = interval_dist(v.col, col0, col1);
  return dr > dc ? dr : dc;
}

// ---------------------------------------------------------------------------
// Exact sightline/cell contact for the unit-square terrain model.
//
// The open segment from the viewpoint to center p is clipped against the
// unit square of cell q in doubled coordinates; all comparisons are integer.
// PROPER means the segment crosses the square's interior (or a positive-
// length piece of its boundary, which the parity argument above rules out);
// GRAZE means contact at exactly one point (a corner on the segment), which
// never occludes.
// ---------------------------------------------------------------------------
enum class CellContact { NONE, GRAZE, PROPER };

namespace detail {

// Rational s = num/den with den > 0.
struct Frac {
  std::int64_t num;
  std::int64_t den;
};

inline bool frac_less(const Frac& a, const Frac& b) {
  return a.num * b.den < b.num * a.den;
}
inline bool frac_eq(const Frac& a, const Frac& b) {
  return a.num * b.den == b.num * a.den;
}

// Intersects [lo, hi] with { s : q-1 <= s*p <= q+1 }; false on empty slab.
inline bool clip_axis(std::int64_t p, std::int64_t q, Frac& lo, Frac& hi) {
  if (p == 0) return q == 0;  // q odd-offset bounds reduce to |q| <= 1
  Frac a{q - 1, p}, b{q + 1, p};
  if (p < 0) {
    a = Frac{-(q + 1), -p};
    b = Frac{-(q - 1), -p};
  }
  if (frac_less(lo, a)) lo = a;
  if (frac_less(b, hi)) hi = b;
  return !frac_less(hi, lo);
}

}  // namespace detail

// Contact between cell q's unit square and the open segment v -> p, for
// distinct cells p != v, q != v, q != p, all within one grid.
inline CellContact segment_cell_contact(const Viewpoint& v, int pi, int pj,
                                        int qi, int qj) {
  std::int64_t px = 2 * static_cast<std::int64_t>(pj - v.col);
  std::int64_t py = 2 * static_cast<std::int64_t>(v.row - pi);
  std::int64_t qx = 2 * static_cast<std::int64_t>(qj - v.col);
  std::int64_t qy = 2 * static_cast<std::int64_t>(v.row - qi);
  detail::Frac lo{0, 1}, hi{1, 1};
  if (!detail::clip_axis(px, qx, lo, hi)) return CellContact::NONE;
  if (!detail::clip_axis(py, qy, lo, hi)) return CellContact::NONE;
  if (detail::frac_less(hi, lo)) return CellContact::NONE;
  if (detail::frac_eq(lo, hi)) return CellContact::GRAZE;
  return CellContact::PROPER;
}

}  // namespace viewshed
