#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "block_store.hpp"
#include "geometry.hpp"
#include "grid.hpp"

// Centrifugal viewshed sweep. The visited region grows outward from the
// viewpoint through a recursive quadrant traversal, staying star-shaped, so
// by the time a point is visited everything that could block its sightline
// has already been accounted for. The horizon of the visited region is kept
// in a flat array of azimuth slots holding elevation-key maxima; a point is
// visible iff its key strictly exceeds the slot at its azimuth, and then the
// slots spanned by its cell are raised to its key. Discretizing the horizon
// into slots trades exactness near silhouette edges for O(1) lookups.

namespace viewshed {

// Axis-aligned square of grid indices, upper-left corner (i, j), width s.
struct Tile {
  int i = 0;
  int j = 0;
  int s = 0;
};

// Taxicab distance from v to the nearest point of the tile rectangle; 0 when
// the tile contains v. The recursion orders siblings by this, not by the
// ring metric: along any straight sightline both metrics grow linearly, but
// only taxicab puts every cell touched by the open segment v->target
// strictly before the target (cell corners sit on half-integer offsets, so a
// touched cell's center is at least one full taxicab unit closer; the ring
// metric admits same-ring ties that a fixed tiebreak then orders wrongly).
inline int tile_l1_dist(const Viewpoint& v, const Tile& t) {
  return interval_dist(v.row, t.i, t.i + t.s - 1) +
         interval_dist(v.col, t.j, t.j + t.s - 1);
}

// The four subquadrants of t (t.s >= 2, a power of two), sorted by
// increasing taxicab distance, ties by (i, j).
inline std::array<Tile, 4> quadrant_order(const Tile& t, const Viewpoint& v) {
  int h = t.s / 2;
  std::array<Tile, 4> q = {Tile{t.i, t.j, h}, Tile{t.i, t.j + h, h},
                           Tile{t.i + h, t.j, h}, Tile{t.i + h, t.j + h, h}};
  std::sort(q.begin(), q.end(), [&](const Tile& a, const Tile& b) {
    int da = tile_l1_dist(v, a);
    int db = tile_l1_dist(v, b);
    if (da != db) return da < db;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  return q;
}

// Horizon resolution: 32 slots per unit of the grid's largest per-axis
// radius from v, which keeps a slot narrower than a quarter of the angular
// pitch of neighboring grid points in the worst direction. Zero for a 1x1
// grid (no other points, the array is never consulted).
template <typename T>
inline int horizon_slot_count(const BasicGrid<T>& g, const Viewpoint& v) {
  return 32 * max_ring(g, v);
}

// Azimuths are measured counterclockwise from due east in [0, 2pi); slot k
// covers [k, k+1) * 2pi/slot_count, half-open, so a value exactly on a
// boundary belongs to the higher slot.
inline int slot_of_azimuth(double alpha, int slot_count) {
  int k = static_cast<int>(std::floor(alpha / (2.0 * M_PI) * slot_count));
  if (k < 0) k = 0;
  if (k >= slot_count) k = slot_count - 1;
  return k;
}

// Inclusive modular slot range [lo .. hi] (iterate lo, lo+1, ... mod count)
// covering the azimuth interval subtended by the closed unit cell of (i, j).
// Cells east of v straddle azimuth 0 and come out with lo > hi.
struct SlotSpan {
  int lo = 0;
  int hi = 0;
};

// Number of slots in the modular range.
inline int slot_span_size(const SlotSpan& sp, int slot_count) {
  return (sp.hi - sp.lo + slot_count) % slot_count + 1;
}

inline SlotSpan slot_span(const Viewpoint& v, int i, int j, int slot_count) {
  double dx = static_cast<double>(j - v.col);
  double dy = static_cast<double>(v.row - i);
  // A unit square not containing v subtends less than pi, so anchoring at
  // one corner and wrapping the other three into (-pi, pi] of it recovers
  // the interval without assuming which side of azimuth 0 it lies on.
  double base = 0.0;
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (double sx : {-0.5, 0.5}) {
    for (double sy : {-0.5, 0.5}) {
      double a = std::atan2(dy + sy, dx + sx);
      if (first) {
        base = lo = hi = a;
        first = false;
        continue;
      }
      double d = a - base;
      if (d > M_PI)
        a -= 2.0 * M_PI;
      else if (d < -M_PI)
        a += 2.0 * M_PI;
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
  }
  double scale = slot_count / (2.0 * M_PI);
  int klo = static_cast<int>(std::floor(lo * scale));
  int khi = static_cast<int>(std::ceil(hi * scale)) - 1;
  if (khi < klo) khi = klo;
  SlotSpan sp;
  sp.lo = ((klo % slot_count) + slot_count) % slot_count;
  sp.hi = ((khi % slot_count) + slot_count) % slot_count;
  return sp;
}

// Shortest circular distance from azimuth a to the closed interval
// [lo, hi] (radians, hi >= lo, interval shorter than the full circle).
inline double azimuth_gap(double a, double lo, double hi) {
  double two_pi = 2.0 * M_PI;
  double w = hi - lo;
  // position of a relative to lo, wrapped into [0, 2pi)
  double r = std::fmod(a - lo, two_pi);
  if (r < 0.0) r += two_pi;
  if (r <= w) return 0.0;
  return std::min(r - w, two_pi - r);
}

// For a point ruled invisible, the cell whose key occupied its test slot at
// visit time, with that cell's exact azimuth interval. Disagreements with
// the exact oracle trace back to this cell's interval boundary passing
// within one slot width of the tested azimuth.
struct SlotBlocker {
  int i = -1;
  int j = -1;
  double lo = 0.0;
  double hi = 0.0;
  double key = -std::numeric_limits<double>::infinity();
};

struct CentrifugalDiag {
  std::size_t slots = 0;           // horizon array length
  std::uint64_t slot_touches = 0;  // slots examined by update loops
  std::uint64_t slot_raises = 0;   // examinations that increased a slot
  int tile_threshold = 0;          // bulk-load tile width (simulated runs)
  bool record_visit_order = false;
  std::vector<std::pair<int, int>> visit_order;
  bool record_blockers = false;
  std::vector<SlotBlocker> blocker;  // per cell, set for INVISIBLE cells
  bool record_slot_values = false;
  std::vector<double> slot_values;  // final horizon array
  bool record_layer_touches = false;
  std::vector<std::uint32_t> layer_slot_touches;  // (max_ring+1) x slots
};

// Final horizon array as CSV for plotting.
inline std::string slot_csv(const std::vector<double>& slots) {
  std::ostringstream os;
  os.precision(17);
  os << "slot,key\n";
  for (std::size_t k = 0; k < slots.size(); ++k) os << k << ',' << slots[k] << '\n';
  return os.str();
}

namespace detail {

template <typename T>
struct CentrifugalRun {
  const BasicGrid<T>& g;
  Viewpoint v;
  double eye;
  int slot_count;
  std::vector<double> slots;
  std::vector<SlotBlocker> arg;  // per slot, current maximum's origin
  VisibilityGrid& out;
  CentrifugalDiag* diag;
  BlockStore<T>* zstore = nullptr;
  BlockStore<std::uint8_t>* vstore = nullptr;
  int threshold = 0;  // bulk-load width; 0 disables buffering

  // active bulk-loaded tile, clipped to the grid
  bool buffered = false;
  int br0 = 0, bc0 = 0, brows = 0, bcols = 0;
  std::vector<T> bz;
  std::vector<Flag> bf;

  CentrifugalRun(const BasicGrid<T>& grid, const Viewpoint& vp,
                 VisibilityGrid& o, CentrifugalDiag* d)
      : g(grid), v(vp), eye(eye_elevation(grid, vp)),
        slot_count(horizon_slot_count(grid, vp)),
        slots(slot_count, -std::numeric_limits<double>::infinity()),
        out(o), diag(d) {
    if (diag) {
      diag->slots = static_cast<std::size_t>(slot_count);
      if (diag->record_blockers) {
        arg.resize(slot_count);
        diag->blocker.assign(g.size(), SlotBlocker{});
      }
      if (diag->record_layer_touches)
        diag->layer_slot_touches.assign(
            static_cast<std::size_t>(max_ring(g, v) + 1) * slot_count, 0);
    }
  }

  void load(const Tile& t) {
    br0 = std::max(t.i, 0);
    bc0 = std::max(t.j, 0);
    int r1 = std::min(t.i + t.s - 1, g.nrows - 1);
    int c1 = std::min(t.j + t.s - 1, g.ncols - 1);
    brows = r1 - br0 + 1;
    bcols = c1 - bc0 + 1;
    bz.assign(static_cast<std::size_t>(brows) * bcols, T(0));
    bf.assign(static_cast<std::size_t>(brows) * bcols, Flag::INVISIBLE);
    for (int r = 0; r < brows; ++r)
      for (int c = 0; c < bcols; ++c)
        bz[static_cast<std::size_t>(r) * bcols + c] =
            zstore->read(g.index(br0 + r, bc0 + c));
    buffered = true;
  }

  void flush() {
    for (int r = 0; r < brows; ++r)
      for (int c = 0; c < bcols; ++c) {
        Flag f = bf[static_cast<std::size_t>(r) * bcols + c];
        vstore->write(g.index(br0 + r, bc0 + c), static_cast<std::uint8_t>(f));
        out.at(br0 + r, bc0 + c) = f;
      }
    buffered = false;
  }

  void visit(int i, int j) {
    if (diag && diag->record_visit_order) diag->visit_order.emplace_back(i, j);
    Flag f = classify(i, j);
    if (buffered)
      bf[static_cast<std::size_t>(i - br0) * bcols + (j - bc0)] = f;
    else
      out.at(i, j) = f;
  }

  Flag classify(int i, int j) {
    if (i == v.row && j == v.col) return Flag::VISIBLE;
    T z = buffered ? bz[static_cast<std::size_t>(i - br0) * bcols + (j - bc0)]
                   : g.at(i, j);
    if (g.is_nodata(z)) return Flag::NODATA;

    std::int64_t dxi = j - v.col;
    std::int64_t dyi = v.row - i;
    std::int64_t d2 = dxi * dxi + dyi * dyi;
    double key = elev_key(static_cast<double>(z) - eye, d2, g.cell_spacing);

    double alpha = std::atan2(static_cast<double>(dyi), static_cast<double>(dxi));
    if (alpha < 0.0) alpha += 2.0 * M_PI;
    int k = slot_of_azimuth(alpha, slot_count);

    Flag f = key > slots[k] ? Flag::VISIBLE : Flag::INVISIBLE;
    if (f == Flag::INVISIBLE && diag && diag->record_blockers)
      diag->blocker[g.index(i, j)] = arg[k];

    SlotSpan sp = slot_span(v, i, j, slot_count);
    int span = slot_span_size(sp, slot_count);
    int layer = ring_of(v, i, j);
    for (int x = 0, s = sp.lo; x < span; ++x, s = (s + 1 == slot_count ? 0 : s + 1)) {
      if (diag) {
        ++diag->slot_touches;
        if (diag->record_layer_touches)
          ++diag->layer_slot_touches[static_cast<std::size_t>(layer) * slot_count + s];
      }
      if (slots[s] < key) {
        slots[s] = key;
        if (diag) {
          ++diag->slot_raises;
          if (diag->record_blockers) {
            // recover the exact interval for gap measurements; lo/hi as an
            // ordered pair in radians, possibly extending past 2pi
            arg[s] = blocker_of(i, j, key);
          }
        }
      }
    }
    return f;
  }

  SlotBlocker blocker_of(int i, int j, double key) const {
    SlotBlocker b;
    b.i = i;
    b.j = j;
    b.key = key;
    double dx = static_cast<double>(j - v.col);
    double dy = static_cast<double>(v.row - i);
    double base = 0.0, lo = 0.0, hi = 0.0;
    bool first = true;
    for (double sx : {-0.5, 0.5})
      for (double sy : {-0.5, 0.5}) {
        double a = std::atan2(dy + sy, dx + sx);
        if (first) {
          base = lo = hi = a;
          first = false;
          continue;
        }
        double d = a - base;
        if (d > M_PI)
          a -= 2.0 * M_PI;
        else if (d < -M_PI)
          a += 2.0 * M_PI;
        lo = std::min(lo, a);
        hi = std::max(hi, a);
      }
    if (lo < 0.0) {
      lo += 2.0 * M_PI;
      hi += 2.0 * M_PI;
    }
    b.lo = lo;
    b.hi = hi;
    return b;
  }

  void sweep(const Tile& t) {
    if (t.i >= g.nrows || t.j >= g.ncols) return;  // fully outside
    bool loaded_here = false;
    if (zstore && !buffered && t.s <= threshold) {
      load(t);
      loaded_here = true;
    }
    if (t.s == 1) {
      visit(t.i, t.j);
    } else {
      for (const Tile& c : quadrant_order(t, v)) sweep(c);
    }
    if (loaded_here) flush();
  }
};

}  // namespace detail

// Root tile: the smallest power-of-two square anchored at (0, 0) covering
// the whole grid. Out-of-grid subtiles are skipped without I/O.
template <typename T>
inline VisibilityGrid centrifugal_sweep(const BasicGrid<T>& g, const Viewpoint& v,
                                        SimulatedIo* io = nullptr,
                                        CentrifugalDiag* diag = nullptr) {
  validate_viewpoint(g, v);
  VisibilityGrid out(g.nrows, g.ncols);
  detail::CentrifugalRun<T> run(g, v, out, diag);

  BlockStore<T> zstore = io ? BlockStore<T>(g.values, io->block_values, io->cache_blocks)
                            : BlockStore<T>(0, 1, 1);
  BlockStore<std::uint8_t> vstore =
      io ? BlockStore<std::uint8_t>(g.size(), io->block_values, io->cache_blocks)
         : BlockStore<std::uint8_t>(0, 1, 1);
  if (io) {
    run.zstore = &zstore;
    run.vstore = &vstore;
    // bulk-load tiles once they fit in half the cache's value capacity
    std::size_t half = io->block_values * io->cache_blocks / 2;
    int w = 1;
    while (static_cast<std::size_t>(2 * w) * (2 * w) <= half) w *= 2;
    run.threshold = w;
    if (diag) diag->tile_threshold = w;
  }

  int side = std::max(g.nrows, g.ncols);
  int s = 1;
  while (s < side) s *= 2;
  run.sweep(Tile{0, 0, s});

  if (io) {
    io->report("grid", zstore.stats());
    vstore.flush();
    io->report("vis", vstore.stats());
  }
  if (diag && diag->record_slot_values) diag->slot_values = run.slots;
  return out;
}

}  // namespace viewshed
