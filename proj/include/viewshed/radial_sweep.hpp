#pragma once

// Radial sweeps in the unit-cell terrain model. A rotating ray visits every
// cell three times (ENTER at its clockwise-most corner, CENTER over the grid
// point, EXIT at the counterclockwise-most corner); an ordered active set of
// ray-cut cells answers each CENTER query. Two I/O layouts share the event
// machinery: concentric distance bands read in ENTER order, and azimuth
// sectors distributed by ENTER angle. Both produce outputs identical to the
// per-point unit-cell oracle: with the corner tie order EXIT < CENTER < ENTER,
// ray containment plus a strictly smaller center distance holds exactly when
// the open sightline crosses the cell's square.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "viewshed/block_store.hpp"
#include "viewshed/geometry.hpp"
#include "viewshed/grid.hpp"

namespace viewshed {

// ---------------------------------------------------------------------------
// Active structure: treap keyed by squared center distance, each node
// augmented with the maximum elevation key in its subtree. Two cells at equal
// distance are never cut by one ray at the same time (their corner intervals
// meet at most in a single shared corner, which the event tie order
// serializes), so the distance alone is a unique key; (i, j) is stored to
// catch misuse.
// ---------------------------------------------------------------------------
class ActiveStructure {
 public:
  void insert(std::int64_t d2, double key, int i, int j) {
    int nn = alloc(d2, key, i, j);
    root_ = insert_rec(root_, nn);
    ++count_;
  }

  void erase(std::int64_t d2, int i, int j) {
    root_ = erase_rec(root_, d2, i, j);
    --count_;
  }

  bool contains(std::int64_t d2) const {
    int t = root_;
    while (t >= 0) {
      if (d2 < pool_[t].d2)
        t = pool_[t].l;
      else if (d2 > pool_[t].d2)
        t = pool_[t].r;
      else
        return true;
    }
    return false;
  }

  // Elevation key stored for an active cell; the CENTER event reads its own
  // cell's key back from here instead of touching the grid again.
  double key_of(std::int64_t d2) const {
    int t = root_;
    while (t >= 0) {
      if (d2 < pool_[t].d2)
        t = pool_[t].l;
      else if (d2 > pool_[t].d2)
        t = pool_[t].r;
      else
        return pool_[t].key;
    }
    throw invariant_error("active structure: key_of absent entry");
  }

  // Maximum elevation key over entries strictly closer than d2; -inf when
  // nothing is closer.
  double max_below(std::int64_t d2) const {
    double best = -std::numeric_limits<double>::infinity();
    int t = root_;
    while (t >= 0) {
      if (pool_[t].d2 < d2) {
        if (pool_[t].key > best) best = pool_[t].key;
        int l = pool_[t].l;
        if (l >= 0 && pool_[l].submax > best) best = pool_[l].submax;
        t = pool_[t].r;
      } else {
        t = pool_[t].l;
      }
    }
    return best;
  }

  std::size_t size() const { return count_; }

 private:
  struct Node {
    std::int64_t d2;
    double key, submax;
    std::uint64_t prio;
    int l = -1, r = -1;
    int i, j;
  };

  int alloc(std::int64_t d2, double key, int i, int j) {
    Node n;
    n.d2 = d2;
    n.key = n.submax = key;
    n.prio = rng_();
    n.i = i;
    n.j = j;
    if (!free_.empty()) {
      int idx = free_.back();
      free_.pop_back();
      pool_[idx] = n;
      return idx;
    }
    pool_.push_back(n);
    return static_cast<int>(pool_.size()) - 1;
  }

  void pull(int t) {
    double m = pool_[t].key;
    if (pool_[t].l >= 0) m = std::max(m, pool_[pool_[t].l].submax);
    if (pool_[t].r >= 0) m = std::max(m, pool_[pool_[t].r].submax);
    pool_[t].submax = m;
  }

  int rotate_right(int t) {
    int l = pool_[t].l;
    pool_[t].l = pool_[l].r;
    pool_[l].r = t;
    pull(t);
    pull(l);
    return l;
  }

  int rotate_left(int t) {
    int r = pool_[t].r;
    pool_[t].r = pool_[r].l;
    pool_[r].l = t;
    pull(t);
    pull(r);
    return r;
  }

  int insert_rec(int t, int nn) {
    if (t < 0) return nn;
    if (pool_[nn].d2 < pool_[t].d2) {
      pool_[t].l = insert_rec(pool_[t].l, nn);
      pull(t);
      if (pool_[pool_[t].l].prio > pool_[t].prio) t = rotate_right(t);
    } else if (pool_[nn].d2 > pool_[t].d2) {
      pool_[t].r = insert_rec(pool_[t].r, nn);
      pull(t);
      if (pool_[pool_[t].r].prio > pool_[t].prio) t = rotate_left(t);
    } else {
      throw invariant_error("active structure: duplicate distance key");
    }
    return t;
  }

  int join(int a, int b) {
    if (a < 0) return b;
    if (b < 0) return a;
    if (pool_[a].prio > pool_[b].prio) {
      pool_[a].r = join(pool_[a].r, b);
      pull(a);
      return a;
    }
    pool_[b].l = join(a, pool_[b].l);
    pull(b);
    return b;
  }

  int erase_rec(int t, std::int64_t d2, int i, int j) {
    if (t < 0) throw invariant_error("active structure: delete of absent key");
    if (d2 < pool_[t].d2) {
      pool_[t].l = erase_rec(pool_[t].l, d2, i, j);
    } else if (d2 > pool_[t].d2) {
      pool_[t].r = erase_rec(pool_[t].r, d2, i, j);
    } else {
      if (pool_[t].i != i || pool_[t].j != j)
        throw invariant_error("active structure: delete position mismatch");
      free_.push_back(t);
      return join(pool_[t].l, pool_[t].r);
    }
    pull(t);
    return t;
  }

  std::vector<Node> pool_;
  std::vector<int> free_;
  int root_ = -1;
  std::size_t count_ = 0;
  std::mt19937_64 rng_{0x9e3779b97f4a7c15ULL};
};

inline void active_insert(ActiveStructure& a, std::int64_t d2, double key,
                          int i, int j) {
  a.insert(d2, key, i, j);
}
inline void active_delete(ActiveStructure& a, std::int64_t d2, int i, int j) {
  a.erase(d2, i, j);
}
// VISIBLE iff nothing strictly closer reaches the target's key (ties occlude).
inline bool active_query(const ActiveStructure& a, std::int64_t d2, double key) {
  return a.max_below(d2) < key;
}

// ---------------------------------------------------------------------------
// Ring walks. A ring is traversed counterclockwise from due east, matching
// the azimuth order of both its ENTER and its CENTER events; positions
// outside the grid are skipped silently so one walk serves any viewpoint.
// ---------------------------------------------------------------------------
namespace detail {

struct RingWalk {
  int l;            // ring index
  int dx, dy;       // current offset, east and north positive
  int steps;        // walk positions consumed, in [0, 8l]
};

inline void ring_walk_step(RingWalk& r) {
  if (r.dx == r.l && r.dy != r.l)
    ++r.dy;
  else if (r.dy == r.l && r.dx != -r.l)
    --r.dx;
  else if (r.dx == -r.l && r.dy != -r.l)
    --r.dy;
  else
    ++r.dx;
  ++r.steps;
}

inline bool ring_walk_in_grid(const RingWalk& r, int nrows, int ncols,
                              const Viewpoint& v) {
  int i = v.row - r.dy;
  int j = v.col + r.dx;
  return i >= 0 && i < nrows && j >= 0 && j < ncols;
}

// Positions the walk on its first in-grid cell; false when the whole ring
// lies outside the grid.
inline bool ring_walk_seed(RingWalk& r, int l, int nrows, int ncols,
                           const Viewpoint& v) {
  r = RingWalk{l, l, 0, 0};
  while (r.steps < 8 * l && !ring_walk_in_grid(r, nrows, ncols, v))
    ring_walk_step(r);
  return r.steps < 8 * l;
}

// Advances to the next in-grid cell; false when the ring is exhausted.
inline bool ring_walk_advance(RingWalk& r, int nrows, int ncols,
                              const Viewpoint& v) {
  do {
    ring_walk_step(r);
  } while (r.steps < 8 * r.l && !ring_walk_in_grid(r, nrows, ncols, v));
  return r.steps < 8 * r.l;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Event march: merges the counterclockwise walks of rings [lo, hi] into one
// azimuth-ordered event stream, generated on the fly from a priority queue.
// Per ring the queue holds at most one pending ENTER plus one CENTER or EXIT
// per ray-cut cell; a cell's EXIT is deferred until its CENTER pops, which
// caps the queue at three entries per ring.
//
// Cells on the viewpoint's eastern half-row straddle azimuth 0. Their entry
// corners sort into the pre-east bucket so a sweep has them active from the
// start; when a ring's walk wraps back past due east, the FULL march emits a
// second ENTER for them at the true fourth-quadrant corner azimuth (flagged
// as a re-entry), and their wrapped EXIT never fires: the sweep ends first.
// ---------------------------------------------------------------------------
class EventMarch {
 public:
  enum class Mode { ENTERS, CENTERS, FULL };

  EventMarch(int nrows, int ncols, const Viewpoint& v, int lo, int hi,
             Mode mode)
      : nrows_(nrows), ncols_(ncols), v_(v), lo_(lo), mode_(mode) {
    walks_.resize(hi >= lo ? hi - lo + 1 : 0);
    for (int l = lo; l <= hi; ++l) {
      detail::RingWalk& rw = walks_[l - lo];
      if (ring_walk_seed(rw, l, nrows, ncols, v)) push_walk_event(rw);
    }
  }

  bool next(Event& out) {
    bool ignored;
    return next(out, ignored);
  }

  bool next(Event& out, bool& reentry) {
    reentry = false;
    if (q_.empty()) return false;
    out = q_.top();
    q_.pop();
    if (mode_ != Mode::FULL) {
      advance_walk(ring_of(v_, out.i, out.j));
      return true;
    }
    if (out.type == EventType::ENTER) {
      if (out.azimuth.quadrant == 3 && out.i == v_.row && out.j > v_.col) {
        reentry = true;
        return true;
      }
      push(cell_events(v_, out.i, out.j).center);
      advance_walk(ring_of(v_, out.i, out.j));
    } else if (out.type == EventType::CENTER) {
      push(cell_events(v_, out.i, out.j).exit);
    }
    return true;
  }

  std::size_t max_queue() const { return max_queue_; }

 private:
  struct Cmp {
    bool operator()(const Event& a, const Event& b) const {
      return event_less(b, a);
    }
  };

  void push(const Event& e) {
    q_.push(e);
    if (q_.size() > max_queue_) max_queue_ = q_.size();
  }

  void push_walk_event(const detail::RingWalk& rw) {
    CellEvents ev = cell_events(v_, v_.row - rw.dy, v_.col + rw.dx);
    push(mode_ == Mode::CENTERS ? ev.center : ev.enter);
  }

  void advance_walk(int l) {
    detail::RingWalk& rw = walks_[l - lo_];
    if (ring_walk_advance(rw, nrows_, ncols_, v_)) {
      push_walk_event(rw);
    } else if (mode_ == Mode::FULL && v_.col + rw.l < ncols_) {
      std::int32_t d = rw.l;
      push(Event{AzimuthKey{3, 2 * d - 1, -1}, EventType::ENTER, d * d,
                 v_.row, v_.col + d});
    }
  }

  int nrows_, ncols_;
  Viewpoint v_;
  int lo_;
  Mode mode_;
  std::vector<detail::RingWalk> walks_;
  std::priority_queue<Event, std::vector<Event>, Cmp> q_;
  std::size_t max_queue_ = 0;
};

struct SweepDiag {
  std::uint64_t events = 0;        // ENTER + CENTER + EXIT processed
  std::size_t max_queue = 0;       // peak event queue size
  std::size_t max_active = 0;      // peak active structure size
  int band_width = 0;              // banded variant only
  std::size_t sectors = 0;         // sectored variant only
};

// Event-order regression trace: one row per event of a full sweep.
inline std::string sweep_event_trace(int nrows, int ncols, const Viewpoint& v) {
  std::ostringstream os;
  os << "azimuth,type,i,j\n";
  os.precision(17);
  int m = 0;
  for (int i = 0; i < nrows; ++i)
    for (int j = 0; j < ncols; ++j) m = std::max(m, ring_of(v, i, j));
  EventMarch march(nrows, ncols, v, 1, m, EventMarch::Mode::FULL);
  Event e;
  while (march.next(e)) {
    const char* t = e.type == EventType::ENTER    ? "ENTER"
                    : e.type == EventType::CENTER ? "CENTER"
                                                  : "EXIT";
    os << azimuth_radians(e.azimuth) << ',' << t << ',' << e.i << ',' << e.j
       << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Banded layout. Band k (k >= 0) holds rings k*w+1 .. (k+1)*w; w is the
// largest power of two whose (2w+1)^2-point tile of elevations (4 bytes) and
// flags (1 byte) fits in a third of the byte budget, floored at 1.
// ---------------------------------------------------------------------------
inline int band_width_for_budget(std::size_t budget_bytes) {
  int w = 1;
  for (;;) {
    std::size_t side = 2 * static_cast<std::size_t>(w) * 2 + 1;
    if (side * side * 5 <= budget_bytes / 3)
      w *= 2;
    else
      break;
  }
  return w;
}

struct RadialBands {
  int w = 1;
  int rings = 0;                      // highest ring index
  std::vector<std::vector<float>> e;  // per band, elevations in ENTER order
  std::size_t bands() const { return e.size(); }
};

// One pass per band over the input grid, in ENTER order; the sweep line cuts
// at most two band tiles at a time, so a block cache of modest size keeps the
// input reads near one scan.
template <typename T>
inline RadialBands radial_build_bands(const BasicGrid<T>& g, const Viewpoint& v,
                                      int w, SimulatedIo* io = nullptr) {
  if (w < 1) throw config_error("band width must be >= 1");
  RadialBands out;
  out.w = w;
  out.rings = max_ring(g, v);
  std::size_t nbands = (out.rings + w - 1) / w;
  out.e.resize(nbands);

  // ENTER ranks come from an elevation-free march; the input is then
  // distributed into its band slots by one storage-order scan, so the grid
  // store is read exactly once regardless of band count.
  std::vector<std::uint32_t> rank(g.size(), 0);
  for (std::size_t k = 0; k < nbands; ++k) {
    int lo = static_cast<int>(k) * w + 1;
    int hi = std::min(out.rings, (static_cast<int>(k) + 1) * w);
    EventMarch march(g.nrows, g.ncols, v, lo, hi, EventMarch::Mode::ENTERS);
    Event e;
    std::size_t c = 0;
    while (march.next(e))
      rank[static_cast<std::size_t>(e.i) * g.ncols + e.j] =
          static_cast<std::uint32_t>(c++);
    out.e[k].resize(c);
  }

  BlockStore<T> grid_store =
      io ? BlockStore<T>(g.values, io->block_values, io->cache_blocks)
         : BlockStore<T>(0, 1, 1);
  for (int i = 0; i < g.nrows; ++i)
    for (int j = 0; j < g.ncols; ++j) {
      int l = ring_of(v, i, j);
      if (l == 0) continue;
      std::size_t idx = static_cast<std::size_t>(i) * g.ncols + j;
      float z = io ? static_cast<float>(grid_store.read(idx))
                   : static_cast<float>(g.values[idx]);
      out.e[static_cast<std::size_t>((l - 1) / w)][rank[idx]] = z;
    }
  if (io) io->report("grid", grid_store.stats());
  if (io) {
    IoStats w_stats;
    for (const auto& band : out.e) {
      BlockStore<float> ws(band.size(), io->block_values, io->cache_blocks);
      for (std::size_t x = 0; x < band.size(); ++x) ws.write(x, band[x]);
      ws.flush();
      w_stats.block_loads += ws.stats().block_loads;
      w_stats.block_evictions += ws.stats().block_evictions;
      w_stats.logical_reads += ws.stats().logical_reads;
      w_stats.logical_writes += ws.stats().logical_writes;
    }
    io->report("bands", w_stats);
  }
  return out;
}

namespace detail {

inline std::int64_t pack_pos(int i, int j) {
  return (static_cast<std::int64_t>(i) << 32) |
         static_cast<std::uint32_t>(j);
}

// Shared ENTER/CENTER/EXIT handling against the active structure. The z for
// an ENTER comes from whatever list layout the caller maintains; the CENTER
// reads its own key back from the active structure and reports a flag.
struct SweepCore {
  double eye_z;
  double spacing;
  ActiveStructure active;
  std::unordered_set<std::int64_t> nodata_active;
  std::size_t max_active = 0;

  void enter(const Event& e, float z, bool z_is_nodata) {
    if (z_is_nodata) {
      nodata_active.insert(pack_pos(e.i, e.j));
      return;
    }
    double key = elev_key(static_cast<double>(z) - eye_z, e.dist2, spacing);
    active.insert(e.dist2, key, e.i, e.j);
    if (active.size() > max_active) max_active = active.size();
  }

  Flag center(const Event& e) const {
    if (nodata_active.count(pack_pos(e.i, e.j))) return Flag::NODATA;
    return active_query(active, e.dist2, active.key_of(e.dist2))
               ? Flag::VISIBLE
               : Flag::INVISIBLE;
  }

  void exit(const Event& e) {
    auto it = nodata_active.find(pack_pos(e.i, e.j));
    if (it != nodata_active.end()) {
      nodata_active.erase(it);
      return;
    }
    active.erase(e.dist2, e.i, e.j);
  }
};

}  // namespace detail

// Banded radial sweep: build per-band ENTER-ordered elevation lists, run one
// full sweep reading each list sequentially and writing per-band flag lists,
// then scatter the flags back with per-band CENTER-ordered marches.
template <typename T>
inline VisibilityGrid sweep_banded(const BasicGrid<T>& g, const Viewpoint& v,
                                   std::size_t budget_bytes,
                                   SimulatedIo* io = nullptr,
                                   SweepDiag* diag = nullptr) {
  validate_viewpoint(g, v);
  int w = band_width_for_budget(budget_bytes);
  RadialBands bands = radial_build_bands(g, v, w, io);

  VisibilityGrid out(g.nrows, g.ncols);
  out.at(v.row, v.col) = Flag::VISIBLE;

  detail::SweepCore core;
  core.eye_z = eye_elevation(g, v);
  core.spacing = g.cell_spacing;

  std::vector<std::vector<Flag>> vk(bands.bands());
  std::uint64_t events = 0;
  std::size_t max_queue = 0;
  {
    std::vector<BlockStore<float>> e_stores;
    std::vector<std::size_t> cur(bands.bands(), 0);
    if (io)
      for (const auto& band : bands.e)
        e_stores.emplace_back(band, io->block_values, io->cache_blocks);
    // Eastern half-row elevations, consumed first from every band list, stay
    // resident for the wrapped re-activation near the end of the sweep.
    std::vector<float> east_z(static_cast<std::size_t>(g.ncols), 0.0f);
    EventMarch march(g.nrows, g.ncols, v, 1, bands.rings,
                     EventMarch::Mode::FULL);
    Event e;
    bool reentry = false;
    while (march.next(e, reentry)) {
      if (reentry) {
        float z = east_z[static_cast<std::size_t>(e.j)];
        core.enter(e, z, g.is_nodata(static_cast<T>(z)));
        continue;
      }
      ++events;
      std::size_t k = (ring_of(v, e.i, e.j) - 1) / w;
      if (e.type == EventType::ENTER) {
        float z = io ? e_stores[k].read(cur[k]) : bands.e[k][cur[k]];
        ++cur[k];
        if (e.i == v.row && e.j > v.col)
          east_z[static_cast<std::size_t>(e.j)] = z;
        core.enter(e, z, g.is_nodata(static_cast<T>(z)));
      } else if (e.type == EventType::CENTER) {
        vk[k].push_back(core.center(e));
      } else {
        core.exit(e);
      }
    }
    max_queue = march.max_queue();
    if (io) {
      IoStats rs;
      for (auto& st : e_stores) {
        rs.block_loads += st.stats().block_loads;
        rs.logical_reads += st.stats().logical_reads;
      }
      io->report("bands", rs);
      IoStats ws;
      for (const auto& flags : vk) {
        BlockStore<std::uint8_t> st(flags.size(), io->block_values,
                                    io->cache_blocks);
        for (std::size_t x = 0; x < flags.size(); ++x)
          st.write(x, static_cast<std::uint8_t>(flags[x]));
        st.flush();
        ws.block_loads += st.stats().block_loads;
        ws.block_evictions += st.stats().block_evictions;
        ws.logical_writes += st.stats().logical_writes;
      }
      io->report("vbands", ws);
    }
  }

  // inverse distribution: per band, CENTER order reproduces the flag order
  {
    BlockStore<std::uint8_t> vis_store =
        io ? BlockStore<std::uint8_t>(static_cast<std::size_t>(g.nrows) *
                                          g.ncols,
                                      io->block_values, io->cache_blocks)
           : BlockStore<std::uint8_t>(0, 1, 1);
    IoStats vread;
    for (std::size_t k = 0; k < bands.bands(); ++k) {
      int lo = static_cast<int>(k) * w + 1;
      int hi = std::min(bands.rings, (static_cast<int>(k) + 1) * w);
      std::vector<std::uint8_t> raw(vk[k].size());
      for (std::size_t x = 0; x < raw.size(); ++x)
        raw[x] = static_cast<std::uint8_t>(vk[k][x]);
      BlockStore<std::uint8_t> rk =
          io ? BlockStore<std::uint8_t>(std::move(raw), io->block_values,
                                        io->cache_blocks)
             : BlockStore<std::uint8_t>(0, 1, 1);
      EventMarch march(g.nrows, g.ncols, v, lo, hi, EventMarch::Mode::CENTERS);
      Event e;
      std::size_t cur = 0;
      while (march.next(e)) {
        Flag f = io ? static_cast<Flag>(rk.read(cur)) : vk[k][cur];
        ++cur;
        out.at(e.i, e.j) = f;
        if (io)
          vis_store.write(static_cast<std::size_t>(e.i) * g.ncols + e.j,
                          static_cast<std::uint8_t>(f));
      }
      if (cur != vk[k].size())
        throw invariant_error("band flag list length mismatch");
      if (io) {
        vread.block_loads += rk.stats().block_loads;
        vread.logical_reads += rk.stats().logical_reads;
      }
    }
    if (io) {
      io->report("vbands", vread);
      vis_store.write(static_cast<std::size_t>(v.row) * g.ncols + v.col,
                      static_cast<std::uint8_t>(Flag::VISIBLE));
      vis_store.flush();
      io->report("vis", vis_store.stats());
    }
  }

  if (diag) {
    diag->events = events;
    diag->max_queue = max_queue;
    diag->max_active = core.max_active;
    diag->band_width = w;
    diag->sectors = 0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sectored layout. Boundaries are ENTER azimuths of splitter cells, computed
// by an elevation-free march; each sector then holds at most `capacity`
// cells. The due-east cells sort before azimuth 0 by the ENTER tie rule, so
// the first sector already begins with the cells the sweep must activate
// first.
// ---------------------------------------------------------------------------
struct SectorSet {
  std::vector<Event> bounds;        // splitter ENTER events, ascending
  std::vector<std::int64_t> counts; // cells per sector
  std::size_t sectors() const { return counts.size(); }
};

inline SectorSet compute_sector_boundaries(int nrows, int ncols,
                                           const Viewpoint& v,
                                           std::int64_t capacity) {
  if (capacity < 1) throw config_error("sector capacity must be >= 1");
  int m = 0;
  for (int i = 0; i < nrows; ++i)
    for (int j = 0; j < ncols; ++j) m = std::max(m, ring_of(v, i, j));
  SectorSet s;
  EventMarch march(nrows, ncols, v, 1, m, EventMarch::Mode::ENTERS);
  Event e;
  std::int64_t run = 0;
  while (march.next(e)) {
    if (run == capacity) {
      s.counts.push_back(run);
      s.bounds.push_back(e);
      run = 0;
    }
    ++run;
  }
  if (run > 0) s.counts.push_back(run);
  return s;
}

namespace detail {

struct SectorCell {
  int i, j;
  float z;
  bool reentry;  // duplicate entry for a straddling eastern half-row cell
};

// Second ENTER of an eastern half-row cell at its true fourth-quadrant
// corner azimuth; pairs with EventMarch's wrapped re-activation.
inline Event east_reentry_event(const Viewpoint& v, int i, int j) {
  std::int32_t d = j - v.col;
  return Event{AzimuthKey{3, 2 * d - 1, -1}, EventType::ENTER, d * d, i, j};
}

inline Event sector_cell_enter(const Viewpoint& v, const SectorCell& c) {
  return c.reentry ? east_reentry_event(v, c.i, c.j)
                   : cell_events(v, c.i, c.j).enter;
}

}  // namespace detail

template <typename T>
inline VisibilityGrid sweep_sectored_capacity(const BasicGrid<T>& g,
                                              const Viewpoint& v,
                                              std::int64_t capacity,
                                              SimulatedIo* io = nullptr,
                                              SweepDiag* diag = nullptr) {
  validate_viewpoint(g, v);
  SectorSet sectors = compute_sector_boundaries(g.nrows, g.ncols, v, capacity);

  BlockStore<T> grid_store =
      io ? BlockStore<T>(g.values, io->block_values, io->cache_blocks)
         : BlockStore<T>(0, 1, 1);

  // distribution: one row-major scan, each cell to the sector of its ENTER;
  // eastern half-row cells go in twice, once at the pre-east enter that
  // activates them at the start of the sweep and once at the true
  // fourth-quadrant corner azimuth for the wrapped re-activation
  std::vector<std::vector<detail::SectorCell>> elists(sectors.sectors());
  const auto event_lt = [](const Event& a, const Event& b) {
    return event_less(a, b);
  };
  const auto sector_of = [&](const Event& enter) {
    return static_cast<std::size_t>(
        std::upper_bound(sectors.bounds.begin(), sectors.bounds.end(), enter,
                         event_lt) -
        sectors.bounds.begin());
  };
  for (int i = 0; i < g.nrows; ++i)
    for (int j = 0; j < g.ncols; ++j) {
      float z = io ? static_cast<float>(
                         grid_store.read(static_cast<std::size_t>(i) * g.ncols + j))
                   : static_cast<float>(g.at(i, j));
      if (i == v.row && j == v.col) continue;
      detail::SectorCell c{i, j, z, false};
      elists[sector_of(detail::sector_cell_enter(v, c))].push_back(c);
      if (i == v.row && j > v.col) {
        c.reentry = true;
        elists[sector_of(detail::sector_cell_enter(v, c))].push_back(c);
      }
    }
  if (io) {
    IoStats ws;
    for (const auto& lst : elists) {
      BlockStore<float> st(lst.size() * 3, io->block_values, io->cache_blocks);
      std::size_t x = 0;
      for (const auto& c : lst) {
        st.write(x++, static_cast<float>(c.i));
        st.write(x++, static_cast<float>(c.j));
        st.write(x++, c.z);
      }
      st.flush();
      ws.block_loads += st.stats().block_loads;
      ws.block_evictions += st.stats().block_evictions;
      ws.logical_writes += st.stats().logical_writes;
    }
    io->report("sectors", ws);
  }

  VisibilityGrid out(g.nrows, g.ncols);
  out.at(v.row, v.col) = Flag::VISIBLE;

  detail::SweepCore core;
  core.eye_z = eye_elevation(g, v);
  core.spacing = g.cell_spacing;

  std::vector<std::pair<int, int>> vislist;
  std::uint64_t events = 0;
  std::size_t max_queue = 0;
  IoStats sread;
  {
    int m = max_ring(g, v);
    EventMarch march(g.nrows, g.ncols, v, 1, m, EventMarch::Mode::FULL);
    Event e;
    std::size_t k = 0;     // current sector, loaded and sorted on demand
    std::size_t cur = 0;
    bool loaded = false;
    auto load_sector = [&](std::size_t idx) {
      std::sort(elists[idx].begin(), elists[idx].end(),
                [&](const detail::SectorCell& a, const detail::SectorCell& b) {
                  return event_less(detail::sector_cell_enter(v, a),
                                    detail::sector_cell_enter(v, b));
                });
      if (io) sread.logical_reads += elists[idx].size() * 3;
      if (io && !elists[idx].empty())
        sread.block_loads +=
            (elists[idx].size() * 3 + io->block_values - 1) / io->block_values;
      cur = 0;
      loaded = true;
    };
    bool reentry = false;
    while (march.next(e, reentry)) {
      if (!reentry) ++events;
      if (e.type == EventType::ENTER) {
        if (!loaded) load_sector(k);
        while (cur == elists[k].size()) {
          ++k;
          load_sector(k);
        }
        const detail::SectorCell& c = elists[k][cur];
        if (c.i != e.i || c.j != e.j || c.reentry != reentry)
          throw invariant_error("sector list misaligned with enter order");
        ++cur;
        core.enter(e, c.z, g.is_nodata(static_cast<T>(c.z)));
      } else if (e.type == EventType::CENTER) {
        Flag f = core.center(e);
        if (f == Flag::VISIBLE)
          vislist.emplace_back(e.i, e.j);
        else if (f == Flag::NODATA)
          out.at(e.i, e.j) = Flag::NODATA;
      } else {
        core.exit(e);
      }
    }
    max_queue = march.max_queue();
  }
  if (io) {
    io->report("sectors", sread);
    BlockStore<std::int32_t> lst(vislist.size() * 2, io->block_values,
                                 io->cache_blocks);
    std::size_t x = 0;
    for (const auto& [i, j] : vislist) {
      lst.write(x++, i);
      lst.write(x++, j);
    }
    lst.flush();
    io->report("vislist", lst.stats());
  }

  // produce the map: lexicographic sort, then one row-major scan
  std::sort(vislist.begin(), vislist.end());
  {
    BlockStore<std::uint8_t> vis_store =
        io ? BlockStore<std::uint8_t>(static_cast<std::size_t>(g.nrows) *
                                          g.ncols,
                                      io->block_values, io->cache_blocks)
           : BlockStore<std::uint8_t>(0, 1, 1);
    std::size_t p = 0;
    for (int i = 0; i < g.nrows; ++i)
      for (int j = 0; j < g.ncols; ++j) {
        if (i == v.row && j == v.col) {
          // viewpoint flag was set above
        } else if (p < vislist.size() && vislist[p].first == i &&
                   vislist[p].second == j) {
          out.at(i, j) = Flag::VISIBLE;
          ++p;
        } else if (out.at(i, j) != Flag::NODATA) {
          out.at(i, j) = Flag::INVISIBLE;
        }
        if (io)
          vis_store.write(static_cast<std::size_t>(i) * g.ncols + j,
                          static_cast<std::uint8_t>(out.at(i, j)));
      }
    if (p != vislist.size())
      throw invariant_error("visible list scatter incomplete");
    if (io) {
      vis_store.flush();
      io->report("vis", vis_store.stats());
      io->report("grid", grid_store.stats());
    }
  }

  if (diag) {
    diag->events = events;
    diag->max_queue = max_queue;
    diag->max_active = core.max_active;
    diag->band_width = 0;
    diag->sectors = sectors.sectors();
  }
  return out;
}

// Capacity from the byte budget: (i, j, z) triples at 12 bytes in a third of
// the memory, floored at the legal minimum (one cell per layer).
template <typename T>
inline VisibilityGrid sweep_sectored(const BasicGrid<T>& g, const Viewpoint& v,
                                     std::size_t budget_bytes,
                                     SimulatedIo* io = nullptr,
                                     SweepDiag* diag = nullptr) {
  std::int64_t cap =
      static_cast<std::int64_t>(budget_bytes / 3 / sizeof(detail::SectorCell));
  return sweep_sectored_capacity(g, v, std::max<std::int64_t>(cap, 1), io, diag);
}

}  // namespace viewshed
