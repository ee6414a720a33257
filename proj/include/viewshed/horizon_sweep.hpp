#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include "block_store.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "horizon.hpp"

namespace viewshed {

// ---------------------------------------------------------------------------
// Band partition. Layers (L-infinity rings around v) are packed greedily into
// bands of at most K points; a single layer larger than K forms its own band.
// ---------------------------------------------------------------------------

struct BandRange {
  int lo = 1;  // first layer, inclusive
  int hi = 1;  // last layer, inclusive
  std::int64_t points = 0;
};

struct BandBoundaries {
  std::vector<BandRange> bands;
  int max_layer = 0;
  std::int64_t capacity = 0;
};

// Number of in-grid points on ring l around v.
inline std::int64_t ring_point_count(int nrows, int ncols, const Viewpoint& v, int l) {
  auto box = [&](int r) -> std::int64_t {
    if (r < 0) return 0;
    int r0 = std::max(v.row - r, 0), r1 = std::min(v.row + r, nrows - 1);
    int c0 = std::max(v.col - r, 0), c1 = std::min(v.col + r, ncols - 1);
    if (r1 < r0 || c1 < c0) return 0;
    return static_cast<std::int64_t>(r1 - r0 + 1) * (c1 - c0 + 1);
  };
  return box(l) - box(l - 1);
}

inline BandBoundaries compute_band_boundaries(int nrows, int ncols, const Viewpoint& v,
                                              std::int64_t capacity) {
  if (capacity < 1) throw config_error("band capacity must be at least 1");
  BandBoundaries out;
  out.capacity = capacity;
  int m = std::max({v.row, nrows - 1 - v.row, v.col, ncols - 1 - v.col});
  out.max_layer = m;
  BandRange cur;
  bool open = false;
  for (int l = 1; l <= m; ++l) {
    std::int64_t c = ring_point_count(nrows, ncols, v, l);
    if (!open) {
      cur = BandRange{l, l, c};
      open = true;
    } else if (cur.points + c > capacity) {
      out.bands.push_back(cur);
      cur = BandRange{l, l, c};
    } else {
      cur.hi = l;
      cur.points += c;
    }
  }
  if (open) out.bands.push_back(cur);
  return out;
}

namespace detail {

// Column intervals of the band annulus [lo, hi] within row i: zero, one, or
// two inclusive [c0, c1] ranges, ascending.
inline int band_row_intervals(int nrows, int ncols, const Viewpoint& v, int lo, int hi,
                              int i, int out[4]) {
  if (i < 0 || i >= nrows) return 0;
  int a = std::abs(i - v.row);
  if (a > hi) return 0;
  int c_lo = std::max(v.col - hi, 0), c_hi = std::min(v.col + hi, ncols - 1);
  if (c_lo > c_hi) return 0;
  if (a >= lo) {
    out[0] = c_lo;
    out[1] = c_hi;
    return 1;
  }
  int n = 0;
  int left_hi = std::min(v.col - lo, c_hi);
  int right_lo = std::max(v.col + lo, c_lo);
  if (c_lo <= left_hi) {
    out[2 * n] = c_lo;
    out[2 * n + 1] = left_hi;
    ++n;
  }
  if (right_lo <= c_hi && right_lo > left_hi) {
    out[2 * n] = right_lo;
    out[2 * n + 1] = c_hi;
    ++n;
  }
  return n;
}

// Row-major rank of (i, j) inside one band, via a per-band row prefix. The
// rank equals the append position BuildBands gave the point.
struct BandRank {
  int nrows = 0, ncols = 0;
  Viewpoint v;
  BandRange range;
  std::vector<std::int64_t> prefix;  // prefix[i] = points of this band in rows < i

  void build(int rows, int cols, const Viewpoint& vp, const BandRange& r) {
    nrows = rows;
    ncols = cols;
    v = vp;
    range = r;
    prefix.assign(static_cast<std::size_t>(rows) + 1, 0);
    for (int i = 0; i < rows; ++i) {
      int iv[4];
      int n = band_row_intervals(rows, cols, v, range.lo, range.hi, i, iv);
      std::int64_t c = 0;
      for (int k = 0; k < n; ++k) c += iv[2 * k + 1] - iv[2 * k] + 1;
      prefix[i + 1] = prefix[i] + c;
    }
  }

  std::int64_t rank(int i, int j) const {
    int iv[4];
    int n = band_row_intervals(nrows, ncols, v, range.lo, range.hi, i, iv);
    std::int64_t r = prefix[i];
    for (int k = 0; k < n; ++k) {
      if (j < iv[2 * k]) break;
      if (j <= iv[2 * k + 1]) return r + (j - iv[2 * k]);
      r += iv[2 * k + 1] - iv[2 * k] + 1;
    }
    throw invariant_error("point not in band");
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Banded elevation lists E_k: every non-viewpoint value, grouped by band, in
// row-major encounter order. With simulated I/O the build is one sequential
// pass over the input store and the lists live in their own stores.
// ---------------------------------------------------------------------------

struct BandedElevations {
  BandBoundaries bounds;
  std::vector<std::vector<float>> e;        // plain path
  std::vector<BlockStore<float>> stores;    // simulated path
  bool simulated = false;

  float fetch(int band, std::int64_t idx) {
    return simulated ? stores[band].read(static_cast<std::size_t>(idx))
                     : e[band][static_cast<std::size_t>(idx)];
  }
};

inline BandedElevations build_bands_rowmajor(const Grid& g, const Viewpoint& v,
                                             const BandBoundaries& bounds,
                                             SimulatedIo* io = nullptr) {
  BandedElevations be;
  be.bounds = bounds;
  be.simulated = io != nullptr;
  std::vector<int> band_of(static_cast<std::size_t>(bounds.max_layer) + 1, -1);
  for (std::size_t k = 0; k < bounds.bands.size(); ++k)
    for (int l = bounds.bands[k].lo; l <= bounds.bands[k].hi; ++l) band_of[l] = static_cast<int>(k);

  if (!be.simulated) {
    be.e.resize(bounds.bands.size());
    for (std::size_t k = 0; k < bounds.bands.size(); ++k)
      be.e[k].reserve(static_cast<std::size_t>(bounds.bands[k].points));
    for (int i = 0; i < g.nrows; ++i)
      for (int j = 0; j < g.ncols; ++j) {
        int l = ring_of(v, i, j);
        if (l == 0) continue;
        be.e[band_of[l]].push_back(g.at(i, j));
      }
    return be;
  }

  BlockStore<float> grid_store(g.values, io->block_values, io->cache_blocks);
  for (std::size_t k = 0; k < bounds.bands.size(); ++k)
    be.stores.emplace_back(static_cast<std::size_t>(bounds.bands[k].points),
                           io->block_values, io->cache_blocks);
  std::vector<std::size_t> cursor(bounds.bands.size(), 0);
  for (int i = 0; i < g.nrows; ++i)
    for (int j = 0; j < g.ncols; ++j) {
      float z = grid_store.read(g.index(i, j));
      int l = ring_of(v, i, j);
      if (l == 0) continue;
      int k = band_of[l];
      be.stores[k].write(cursor[k]++, z);
    }
  grid_store.flush();
  io->report("grid", grid_store.stats());
  return be;
}

// Inverse scatter: per-band visibility lists back to a raster. The viewpoint
// cell is always VISIBLE.
inline VisibilityGrid collect_bands(const std::vector<std::vector<Flag>>& vk,
                                    const BandBoundaries& bounds, int nrows, int ncols,
                                    const Viewpoint& v) {
  std::vector<int> band_of(static_cast<std::size_t>(bounds.max_layer) + 1, -1);
  for (std::size_t k = 0; k < bounds.bands.size(); ++k)
    for (int l = bounds.bands[k].lo; l <= bounds.bands[k].hi; ++l) band_of[l] = static_cast<int>(k);
  VisibilityGrid out(nrows, ncols);
  std::vector<std::size_t> cursor(vk.size(), 0);
  for (int i = 0; i < nrows; ++i)
    for (int j = 0; j < ncols; ++j) {
      int l = ring_of(v, i, j);
      if (l == 0) {
        out.at(i, j) = Flag::VISIBLE;
        continue;
      }
      int k = band_of[l];
      out.at(i, j) = vk[k][cursor[k]++];
    }
  return out;
}

// ---------------------------------------------------------------------------
// Layer horizons. A ring is gathered once into screen space; the horizon is
// the upper envelope of its surviving edges (plus, in the gridlines model,
// the radial connector segments joining it to the previous ring).
// ---------------------------------------------------------------------------

namespace detail {

// Inverse of ring_point: full-ring index of offset (di, dj) with
// max(|di|, |dj|) == l.
inline int ring_index(int l, int di, int dj) {
  if (dj == l && di >= 0) return di;
  if (di == l) return 2 * l - dj;
  if (dj == -l) return 4 * l - di;
  if (di == -l) return 6 * l + dj;
  return 8 * l + di;  // dj == l, di < 0
}

}  // namespace detail

// One gathered ring: status and projection per full-ring index.
struct RingData {
  int l = 0;
  enum : std::uint8_t { OUT = 0, NODATA_PT = 1, VALID = 2 };
  std::vector<std::uint8_t> status;
  std::vector<ScreenPoint> pt;  // defined where status == VALID

  std::size_t count() const { return status.size(); }
};

// fetch(i, j) -> float supplies elevations (grid or band list); the grid is
// consulted only for shape and the nodata sentinel.
template <typename Fetch>
inline RingData gather_ring(const Grid& g, const Viewpoint& v, double eye_z, int l,
                            Fetch&& fetch) {
  RingData r;
  r.l = l;
  std::size_t n = static_cast<std::size_t>(8) * l;
  r.status.assign(n, RingData::OUT);
  r.pt.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    RingPos p = ring_point(v, l, static_cast<int>(k));
    if (!g.in_grid(p.i, p.j)) continue;
    float z = fetch(p.i, p.j);
    if (g.is_nodata(z)) {
      r.status[k] = RingData::NODATA_PT;
      continue;
    }
    r.status[k] = RingData::VALID;
    double x = static_cast<double>(p.j - v.col) * g.cell_spacing;
    double y = static_cast<double>(v.row - p.i) * g.cell_spacing;
    r.pt[k] = screen_project(x, y, static_cast<double>(z) - eye_z);
  }
  return r;
}

// Envelope of one ring's polyline. Edges with an invalid endpoint are
// dropped; a valid point with no surviving incident edge keeps point
// coverage. The closing edge wraps the seam via an explicit vertex at t=4.
inline Horizon ring_polyline_horizon(const RingData& r) {
  Horizon h;
  std::size_t n = r.count();
  if (n == 0) return h;
  auto valid = [&](std::size_t k) { return r.status[k % n] == RingData::VALID; };
  auto edge = [&](std::size_t k) {  // edge from k to (k+1) mod n
    return valid(k) && valid(k + 1);
  };
  bool pending_gap = false;
  auto emit = [&](double t, double hh) {
    if (!h.v.empty() && !pending_gap && h.v.back().t == t && h.v.back().h == hh) return;
    if (!h.v.empty() && pending_gap) h.v.back().gap_after = true;
    pending_gap = false;
    h.v.push_back(HorizonVertex{t, hh, false});
  };
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (edge(k)) {
      emit(r.pt[k].t, r.pt[k].h);
      emit(r.pt[k + 1].t, r.pt[k + 1].h);
    } else {
      pending_gap = true;
    }
  }
  if (edge(n - 1)) {
    // closing edge spans the seam: it owns [t_{n-1}, 4], the t=0 end belongs
    // to the first edge
    emit(r.pt[n - 1].t, r.pt[n - 1].h);
    emit(4.0, r.pt[0].h);
  }
  // valid points with no surviving edge at their own abscissa keep point
  // coverage (the wrap edge does not cover t=0)
  for (std::size_t k = 0; k < n; ++k) {
    if (!valid(k)) continue;
    bool covered = (k == 0) ? edge(0) : (edge(k - 1) || edge(k));
    if (!covered) h.spikes.push_back(Spike{r.pt[k].t, r.pt[k].h});
  }
  canonicalize_horizon(h);
  return h;
}

// Radial connector segments between ring l-1 and ring l (gridlines model):
// one per side point of the inner ring, two per corner, omitting segments
// with an invalid endpoint and the axis-aligned degenerate ones.
inline Horizon connector_horizon(const RingData& inner, const RingData& outer,
                                 const Viewpoint& v) {
  Horizon h;
  int li = inner.l, lo = outer.l;
  VS_INVARIANT(lo == li + 1 && li >= 1, "connector rings must be adjacent");
  struct Seg {
    double t0, h0, t1, h1;
  };
  std::vector<Seg> segs;
  std::size_t n = inner.count();
  auto sgn = [](int x) { return x > 0 ? 1 : (x < 0 ? -1 : 0); };
  for (std::size_t k = 0; k < n; ++k) {
    if (inner.status[k] != RingData::VALID) continue;
    RingPos q = ring_point(v, li, static_cast<int>(k));
    int a = q.i - v.row, b = q.j - v.col;
    int cand[4];
    int nc = 0;
    if (std::abs(a) == li) {
      cand[2 * nc] = a + sgn(a);
      cand[2 * nc + 1] = b;
      ++nc;
    }
    if (std::abs(b) == li) {
      cand[2 * nc] = a;
      cand[2 * nc + 1] = b + sgn(b);
      ++nc;
    }
    for (int c = 0; c < nc; ++c) {
      int da = cand[2 * c], db = cand[2 * c + 1];
      int kw = detail::ring_index(lo, da, db);
      if (outer.status[kw] != RingData::VALID) continue;
      const ScreenPoint& pq = inner.pt[k];
      const ScreenPoint& pw = outer.pt[kw];
      if (pq.t == pw.t) continue;  // axis-aligned, covered by ring vertices
      if (pq.t < pw.t)
        segs.push_back(Seg{pq.t, pq.h, pw.t, pw.h});
      else
        segs.push_back(Seg{pw.t, pw.h, pq.t, pq.h});
    }
  }
  if (segs.empty()) return h;
  std::sort(segs.begin(), segs.end(), [](const Seg& a, const Seg& b) {
    return a.t0 < b.t0 || (a.t0 == b.t0 && a.t1 < b.t1);
  });
  bool pending_gap = false;
  auto emit = [&](double t, double hh) {
    if (!h.v.empty() && !pending_gap && h.v.back().t == t && h.v.back().h == hh) return;
    if (!h.v.empty() && pending_gap) h.v.back().gap_after = true;
    pending_gap = false;
    h.v.push_back(HorizonVertex{t, hh, false});
  };
  for (const Seg& s : segs) {
    VS_INVARIANT(h.v.empty() || s.t0 >= h.v.back().t, "connector segments overlap");
    if (!h.v.empty() && s.t0 > h.v.back().t) pending_gap = true;
    emit(s.t0, s.h0);
    emit(s.t1, s.h1);
  }
  canonicalize_horizon(h);
  return h;
}

inline Horizon layer_horizon_from(const RingData& cur, const RingData* prev, Model model,
                                  const Viewpoint& v) {
  Horizon h = ring_polyline_horizon(cur);
  if (model == Model::GRIDLINES && prev != nullptr && prev->l >= 1)
    h = horizon_merge(h, connector_horizon(*prev, cur, v));
  return h;
}

// Direct-from-grid layer horizon.
inline Horizon layer_horizon(const Grid& g, const Viewpoint& v, int l, Model model) {
  double eye = eye_elevation(g, v);
  auto fetch = [&](int i, int j) { return g.at(i, j); };
  RingData cur = gather_ring(g, v, eye, l, fetch);
  if (model == Model::GRIDLINES && l >= 2) {
    RingData prev = gather_ring(g, v, eye, l - 1, fetch);
    return layer_horizon_from(cur, &prev, model, v);
  }
  return layer_horizon_from(cur, nullptr, model, v);
}

// ---------------------------------------------------------------------------
// Horizon growth statistics.
// ---------------------------------------------------------------------------

struct HorizonLayerStat {
  int layer = 0;
  std::size_t layer_vertices = 0;       // |H_l|
  std::size_t cumulative_vertices = 0;  // |H_{1,l}| after merging layer l
};

struct HorizonStats {
  std::vector<HorizonLayerStat> layers;
  std::size_t sum_layer_vertices = 0;
  std::size_t sum_cumulative_vertices = 0;

  void record(int layer, std::size_t layer_v, std::size_t cum_v) {
    layers.push_back(HorizonLayerStat{layer, layer_v, cum_v});
    sum_layer_vertices += layer_v;
    sum_cumulative_vertices += cum_v;
  }

  std::string csv() const {
    std::string out = "layer,layer_horizon_vertices,cumulative_horizon_vertices\n";
    for (const HorizonLayerStat& s : layers) {
      out += std::to_string(s.layer);
      out += ',' + std::to_string(s.layer_vertices);
      out += ',' + std::to_string(s.cumulative_vertices);
      out += '\n';
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Iterative banded sweep: march layers outward, classify each ring against
// the accumulated horizon, then merge the ring's own horizon in.
// ---------------------------------------------------------------------------

struct VisIterResult {
  VisibilityGrid vis;
  HorizonStats stats;
};

namespace detail {

// Classify one gathered ring against H and scatter flags into the band's
// visibility list. Valid points enter in walk order, which is t-sorted.
inline void classify_ring(const RingData& ring, const Horizon& H, bool strict_occlusion,
                          const Viewpoint& v, const BandRank& rank,
                          std::vector<Flag>& vk) {
  std::vector<ScreenPoint> pts;
  std::vector<std::int64_t> where;
  pts.reserve(ring.count());
  where.reserve(ring.count());
  for (std::size_t k = 0; k < ring.count(); ++k) {
    RingPos p = ring_point(v, ring.l, static_cast<int>(k));
    if (ring.status[k] == RingData::OUT) continue;
    std::int64_t rk = rank.rank(p.i, p.j);
    if (ring.status[k] == RingData::NODATA_PT) {
      vk[static_cast<std::size_t>(rk)] = Flag::NODATA;
      continue;
    }
    pts.push_back(ring.pt[k]);
    where.push_back(rk);
  }
  std::vector<std::uint8_t> vis = classify_against_horizon(pts, H, strict_occlusion);
  for (std::size_t x = 0; x < pts.size(); ++x)
    vk[static_cast<std::size_t>(where[x])] = vis[x] ? Flag::VISIBLE : Flag::INVISIBLE;
}

}  // namespace detail

inline VisIterResult vis_iter(const Grid& g, const Viewpoint& v, std::int64_t capacity,
                              Model model, bool strict_occlusion = false,
                              SimulatedIo* io = nullptr) {
  double eye = eye_elevation(g, v);
  BandBoundaries bounds = compute_band_boundaries(g.nrows, g.ncols, v, capacity);
  BandedElevations be = build_bands_rowmajor(g, v, bounds, io);

  VisIterResult out;
  Horizon H;
  RingData prev;
  std::vector<std::vector<Flag>> vk(bounds.bands.size());
  for (std::size_t k = 0; k < bounds.bands.size(); ++k) {
    const BandRange& band = bounds.bands[k];
    detail::BandRank rank;
    rank.build(g.nrows, g.ncols, v, band);
    auto fetch = [&](int i, int j) { return be.fetch(static_cast<int>(k), rank.rank(i, j)); };
    vk[k].assign(static_cast<std::size_t>(band.points), Flag::INVISIBLE);
    for (int l = band.lo; l <= band.hi; ++l) {
      RingData cur = gather_ring(g, v, eye, l, fetch);
      detail::classify_ring(cur, H, strict_occlusion, v, rank, vk[k]);
      Horizon hl = layer_horizon_from(cur, (model == Model::GRIDLINES && l >= 2) ? &prev : nullptr,
                                      model, v);
      H = horizon_merge(H, hl);
      out.stats.record(l, hl.size(), H.size());
      prev = std::move(cur);
    }
  }
  if (io) {
    IoStats bands_io;
    for (auto& st : be.stores) {
      st.flush();
      bands_io += st.stats();
    }
    io->report("bands", bands_io);
  }
  out.vis = collect_bands(vk, bounds, g.nrows, g.ncols, v);
  if (io) {
    BlockStore<std::uint8_t> vis_store(out.vis.flags.size(), io->block_values, io->cache_blocks);
    for (std::size_t x = 0; x < out.vis.flags.size(); ++x)
      vis_store.write(x, static_cast<std::uint8_t>(out.vis.flags[x]));
    vis_store.flush();
    io->report("vis", vis_store.stats());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Divide-and-conquer banded sweep. Per band: classify everything against the
// horizon of all previous bands, then recurse, splitting at the layer whose
// cumulative point count is closest to half the band.
// ---------------------------------------------------------------------------

struct DacDiagnostics {
  std::vector<std::size_t> merges_per_band;
};

inline VisibilityGrid vis_dac(const Grid& g, const Viewpoint& v, std::int64_t capacity,
                              Model model, bool strict_occlusion = false,
                              SimulatedIo* io = nullptr, DacDiagnostics* diag = nullptr) {
  double eye = eye_elevation(g, v);
  BandBoundaries bounds = compute_band_boundaries(g.nrows, g.ncols, v, capacity);
  BandedElevations be = build_bands_rowmajor(g, v, bounds, io);

  Horizon h_prev;
  RingData last_of_prev_band;
  std::vector<std::vector<Flag>> vk(bounds.bands.size());
  for (std::size_t k = 0; k < bounds.bands.size(); ++k) {
    const BandRange& band = bounds.bands[k];
    detail::BandRank rank;
    rank.build(g.nrows, g.ncols, v, band);
    auto fetch = [&](int i, int j) { return be.fetch(static_cast<int>(k), rank.rank(i, j)); };
    vk[k].assign(static_cast<std::size_t>(band.points), Flag::INVISIBLE);

    int nl = band.hi - band.lo + 1;
    std::vector<RingData> rings;
    rings.reserve(static_cast<std::size_t>(nl));
    for (int l = band.lo; l <= band.hi; ++l) rings.push_back(gather_ring(g, v, eye, l, fetch));

    // preamble: everything below the previous bands' horizon is invisible
    for (const RingData& r : rings) detail::classify_ring(r, h_prev, strict_occlusion, v, rank, vk[k]);

    // downgrade-only classification against an intra-band horizon
    auto restrict_ring = [&](const RingData& r, const Horizon& H) {
      std::vector<ScreenPoint> pts;
      std::vector<std::int64_t> where;
      for (std::size_t x = 0; x < r.count(); ++x) {
        if (r.status[x] != RingData::VALID) continue;
        RingPos p = ring_point(v, r.l, static_cast<int>(x));
        std::int64_t rk = rank.rank(p.i, p.j);
        if (vk[k][static_cast<std::size_t>(rk)] != Flag::VISIBLE) continue;
        pts.push_back(r.pt[x]);
        where.push_back(rk);
      }
      std::vector<std::uint8_t> vis = classify_against_horizon(pts, H, strict_occlusion);
      for (std::size_t x = 0; x < pts.size(); ++x)
        if (!vis[x]) vk[k][static_cast<std::size_t>(where[x])] = Flag::INVISIBLE;
    };

    std::vector<std::int64_t> cum(static_cast<std::size_t>(nl) + 1, 0);
    for (int x = 0; x < nl; ++x)
      cum[x + 1] = cum[x] + ring_point_count(g.nrows, g.ncols, v, band.lo + x);

    std::size_t merges = 0;
    const RingData* below_band = (model == Model::GRIDLINES && band.lo >= 2 && k > 0)
                                     ? &last_of_prev_band
                                     : nullptr;
    auto horizon_of = [&](int l) {
      const RingData* inner = nullptr;
      if (model == Model::GRIDLINES && l >= 2)
        inner = (l == band.lo) ? below_band : &rings[l - band.lo - 1];
      return layer_horizon_from(rings[l - band.lo], inner, model, v);
    };
    // recursion over layer range [a, b] (band-relative absolute layers)
    auto dac = [&](auto&& self, int a, int b) -> Horizon {
      if (a == b) return horizon_of(a);
      std::int64_t total = cum[b - band.lo + 1] - cum[a - band.lo];
      int best = a;
      std::int64_t best_diff = -1;
      for (int s = a; s < b; ++s) {
        std::int64_t left = cum[s - band.lo + 1] - cum[a - band.lo];
        std::int64_t diff = std::llabs(2 * left - total);
        if (best_diff < 0 || diff < best_diff) {
          best_diff = diff;
          best = s;
        }
      }
      Horizon left = self(self, a, best);
      for (int l = best + 1; l <= b; ++l) restrict_ring(rings[l - band.lo], left);
      Horizon right = self(self, best + 1, b);
      ++merges;
      return horizon_merge(left, right);
    };
    Horizon h_band = dac(dac, band.lo, band.hi);
    if (diag) diag->merges_per_band.push_back(merges);
    h_prev = horizon_merge(h_prev, h_band);
    last_of_prev_band = std::move(rings.back());
  }
  if (io) {
    IoStats bands_io;
    for (auto& st : be.stores) {
      st.flush();
      bands_io += st.stats();
    }
    io->report("bands", bands_io);
  }
  VisibilityGrid out = collect_bands(vk, bounds, g.nrows, g.ncols, v);
  if (io) {
    BlockStore<std::uint8_t> vis_store(out.flags.size(), io->block_values, io->cache_blocks);
    for (std::size_t x = 0; x < out.flags.size(); ++x)
      vis_store.write(x, static_cast<std::uint8_t>(out.flags[x]));
    vis_store.flush();
    io->report("vis", vis_store.stats());
  }
  return out;
}

}  // namespace viewshed
