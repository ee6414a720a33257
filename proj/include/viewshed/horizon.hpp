#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "geometry.hpp"
#include "grid.hpp"

namespace viewshed {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Relative tolerance for dropping an interior vertex that lies on the segment
// joining its neighbours.
inline constexpr double kCollinearRelTol = 1e-12;

// One endpoint of a horizon span. gap_after marks the open interval to the
// next vertex as uncovered.
struct HorizonVertex {
  double t = 0.0;
  double h = 0.0;
  bool gap_after = false;
};

// Point coverage: a single screen abscissa that occludes at exactly t.
// Arises from valid grid points whose incident segments are all dropped
// (nodata neighbours). Kept only while strictly above the span coverage.
struct Spike {
  double t = 0.0;
  double h = 0.0;
};

// Upper envelope of screen-projected terrain: a piecewise-linear partial
// function of t on [0, 4], -inf outside covered spans.
//
// Invariants:
//  - v is sorted by t; equal t appears only as an adjacent pair with
//    different h (a jump where two spans meet), never three in a row
//  - every vertex is an endpoint of a positive-length span; zero-length
//    coverage lives in spikes
//  - spikes are sorted by t, all h finite
//  - value at t is the max over every span and spike containing t
struct Horizon {
  std::vector<HorizonVertex> v;
  std::vector<Spike> spikes;

  bool empty() const { return v.empty() && spikes.empty(); }
  std::size_t size() const { return v.size() + spikes.size(); }
};

namespace detail {

// Segment value with exact endpoint reproduction; interior by lerp.
inline double edge_value(const HorizonVertex& a, const HorizonVertex& b, double t) {
  if (t == a.t) return a.h;
  if (t == b.t) return b.h;
  return a.h + (b.h - a.h) * ((t - a.t) / (b.t - a.t));
}

// Max span coverage at t over a sorted vertex list; -inf when uncovered.
// k is a cursor pointing at some vertex with v[k].t <= t (or 0); it advances
// persistently so monotone callers stay linear overall.
inline double span_value_at(const std::vector<HorizonVertex>& v, double t, std::size_t& k) {
  double best = kNegInf;
  while (k + 1 < v.size() && v[k + 1].t <= t) ++k;
  // candidate edges start at k or k-1 (jump pairs share the abscissa)
  for (std::size_t back = 0; back < 2; ++back) {
    if (back > k) break;
    std::size_t a = k - back;
    if (v[a].t > t) continue;
    if (v[a].t == t) best = std::max(best, v[a].h);
    if (!v[a].gap_after && a + 1 < v.size() && v[a + 1].t >= t && v[a].t <= t && v[a].t < v[a + 1].t)
      best = std::max(best, edge_value(v[a], v[a + 1], t));
  }
  return best;
}

inline std::size_t lower_vertex(const std::vector<HorizonVertex>& v, double t) {
  // last index with v[idx].t <= t, or 0
  std::size_t lo = std::upper_bound(v.begin(), v.end(), t,
                                    [](double x, const HorizonVertex& a) { return x < a.t; }) -
                   v.begin();
  return lo == 0 ? 0 : lo - 1;
}

}  // namespace detail

// Value of the horizon at t; -inf where nothing covers t.
inline double horizon_query(const Horizon& H, double t) {
  double best = kNegInf;
  if (!H.v.empty()) {
    std::size_t k = detail::lower_vertex(H.v, t);
    best = detail::span_value_at(H.v, t, k);
  }
  if (!H.spikes.empty()) {
    auto it = std::lower_bound(H.spikes.begin(), H.spikes.end(), t,
                               [](const Spike& s, double x) { return s.t < x; });
    if (it != H.spikes.end() && it->t == t) best = std::max(best, it->h);
  }
  return best;
}

// Moves isolated vertices (no span on either side) into the spike list,
// drops interior vertices collinear with their neighbours (never across gaps
// or jump pairs), removes no-op jump pairs, and filters spikes down to those
// strictly above the span coverage. Safe to call repeatedly.
inline void canonicalize_horizon(Horizon& H) {
  std::vector<HorizonVertex>& v = H.v;
  {
    std::vector<Spike> isolated;
    std::vector<HorizonVertex> kept;
    kept.reserve(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
      bool left = !kept.empty() && !kept.back().gap_after && kept.back().t < v[k].t;
      bool right = !v[k].gap_after && k + 1 < v.size() && v[k].t < v[k + 1].t;
      if (left || right)
        kept.push_back(v[k]);
      else
        isolated.push_back(Spike{v[k].t, v[k].h});
    }
    if (!isolated.empty()) {
      v.swap(kept);
      std::vector<Spike> all;
      all.reserve(H.spikes.size() + isolated.size());
      std::merge(H.spikes.begin(), H.spikes.end(), isolated.begin(), isolated.end(),
                 std::back_inserter(all),
                 [](const Spike& a, const Spike& b) { return a.t < b.t; });
      H.spikes.swap(all);
    }
  }
  if (!v.empty()) {
    std::vector<HorizonVertex> w;
    w.reserve(v.size());
    for (const HorizonVertex& x : v) {
      if (!w.empty() && w.back().t == x.t && w.back().h == x.h) {
        // duplicate vertex: keep one, covered beats gap
        w.back().gap_after = w.back().gap_after && x.gap_after;
        continue;
      }
      while (w.size() >= 2) {
        const HorizonVertex& a = w[w.size() - 2];
        const HorizonVertex& b = w.back();
        if (a.gap_after || b.gap_after) break;
        if (!(a.t < b.t && b.t < x.t)) break;
        double fit = detail::edge_value(a, HorizonVertex{x.t, x.h, false}, b.t);
        double scale = std::max({std::fabs(a.h), std::fabs(b.h), std::fabs(x.h)});
        if (std::fabs(b.h - fit) <= kCollinearRelTol * scale)
          w.pop_back();
        else
          break;
      }
      w.push_back(x);
    }
    if (!w.empty()) w.back().gap_after = false;  // no interval follows the last vertex
    v.swap(w);
  }
  if (!H.spikes.empty()) {
    std::vector<Spike> keep;
    keep.reserve(H.spikes.size());
    std::size_t cur = 0;
    for (const Spike& s : H.spikes) {
      VS_INVARIANT(std::isfinite(s.h), "horizon spike height must be finite");
      double cover = v.empty() ? kNegInf : detail::span_value_at(v, s.t, cur);
      if (s.h > cover) {
        if (!keep.empty() && keep.back().t == s.t)
          keep.back().h = std::max(keep.back().h, s.h);
        else
          keep.push_back(s);
      }
    }
    H.spikes.swap(keep);
  }
  for (std::size_t k = 0; k + 1 < v.size(); ++k)
    VS_INVARIANT(v[k].t < v[k + 1].t ||
                     (v[k].t == v[k + 1].t && v[k].h != v[k + 1].h &&
                      (k + 2 >= v.size() || v[k + 1].t < v[k + 2].t)),
                 "horizon vertices must increase in t except at jump pairs");
  for (const HorizonVertex& x : v)
    VS_INVARIANT(std::isfinite(x.h) && x.t >= 0.0 && x.t <= 4.0,
                 "horizon vertex out of range");
}

// Pointwise maximum of two horizons. Output is canonical; where exactly one
// input covers t the output reproduces its pieces bit for bit, and on ties
// the first input wins, so merge(h, h) == h and merge(h, {}) == h.
// Vertex count is bounded by 2 * (|a| + |b|).
inline Horizon horizon_merge(const Horizon& A, const Horizon& B) {
  Horizon out;
  if (A.empty() && B.empty()) return out;
  const std::size_t bound = 2 * (A.size() + B.size());
  out.v.reserve(std::min<std::size_t>(bound, A.v.size() + B.v.size() + 8));

  bool pending_gap = false;
  auto emit = [&](double t, double h) {
    if (!out.v.empty() && !pending_gap && out.v.back().t == t && out.v.back().h == h) return;
    if (!out.v.empty() && pending_gap) out.v.back().gap_after = true;
    pending_gap = false;
    out.v.push_back(HorizonVertex{t, h, false});
  };

  // breakpoints: union of both vertex abscissas
  std::vector<double> bp;
  bp.reserve(A.v.size() + B.v.size());
  {
    std::size_t i = 0, j = 0;
    while (i < A.v.size() || j < B.v.size()) {
      double t;
      if (j >= B.v.size() || (i < A.v.size() && A.v[i].t <= B.v[j].t))
        t = A.v[i++].t;
      else
        t = B.v[j++].t;
      if (bp.empty() || bp.back() != t) bp.push_back(t);
    }
  }

  std::size_t ka = 0, kb = 0;
  // covering edge for slab [t0, t1]: left endpoint is the last vertex at or
  // before t0 (the opener of a jump pair), right endpoint must reach t1
  auto slab_edge = [](const std::vector<HorizonVertex>& v, std::size_t& k, double t0,
                      double t1) -> const HorizonVertex* {
    if (v.empty()) return nullptr;
    while (k + 1 < v.size() && v[k + 1].t <= t0) ++k;
    if (v[k].t > t0 || v[k].gap_after) return nullptr;
    if (k + 1 >= v.size() || v[k + 1].t < t1) return nullptr;
    return &v[k];
  };

  for (std::size_t s = 0; s + 1 < bp.size(); ++s) {
    double t0 = bp[s], t1 = bp[s + 1];
    const HorizonVertex* ea = slab_edge(A.v, ka, t0, t1);
    const HorizonVertex* eb = slab_edge(B.v, kb, t0, t1);
    if (!ea && !eb) {
      // span endpoints touching t0 were emitted by the previous slab; only
      // the gap needs recording
      pending_gap = true;
      continue;
    }
    if (ea && !eb) {
      emit(t0, detail::edge_value(*ea, *(ea + 1), t0));
      emit(t1, detail::edge_value(*ea, *(ea + 1), t1));
      continue;
    }
    if (eb && !ea) {
      emit(t0, detail::edge_value(*eb, *(eb + 1), t0));
      emit(t1, detail::edge_value(*eb, *(eb + 1), t1));
      continue;
    }
    double a0 = detail::edge_value(*ea, *(ea + 1), t0);
    double a1 = detail::edge_value(*ea, *(ea + 1), t1);
    double b0 = detail::edge_value(*eb, *(eb + 1), t0);
    double b1 = detail::edge_value(*eb, *(eb + 1), t1);
    double d0 = a0 - b0, d1 = a1 - b1;
    bool a_first = d0 > 0.0 || (d0 == 0.0 && d1 >= 0.0);
    bool flips = (d0 > 0.0 && d1 < 0.0) || (d0 < 0.0 && d1 > 0.0);
    if (!flips) {
      if (a_first) {
        emit(t0, a0);
        emit(t1, a1);
      } else {
        emit(t0, b0);
        emit(t1, b1);
      }
      continue;
    }
    double tx = t0 + (t1 - t0) * (d0 / (d0 - d1));
    if (!(tx > t0 && tx < t1)) tx = 0.5 * (t0 + t1);
    if (a_first) {
      emit(t0, a0);
      emit(tx, b0 + (b1 - b0) * ((tx - t0) / (t1 - t0)));
      emit(t1, b1);
    } else {
      emit(t0, b0);
      emit(tx, a0 + (a1 - a0) * ((tx - t0) / (t1 - t0)));
      emit(t1, a1);
    }
  }
  // a trailing covered point after the final slab (single-vertex span ends
  // cannot occur, but a gap ending exactly at the last breakpoint can)
  if (pending_gap && !out.v.empty()) out.v.back().gap_after = true;

  // spikes: union by t (max on equal), filtered against spans in canonicalize
  {
    std::size_t i = 0, j = 0;
    while (i < A.spikes.size() || j < B.spikes.size()) {
      Spike s;
      if (j >= B.spikes.size() ||
          (i < A.spikes.size() && A.spikes[i].t <= B.spikes[j].t))
        s = A.spikes[i++];
      else
        s = B.spikes[j++];
      if (!out.spikes.empty() && out.spikes.back().t == s.t)
        out.spikes.back().h = std::max(out.spikes.back().h, s.h);
      else
        out.spikes.push_back(s);
    }
  }

  canonicalize_horizon(out);
  VS_INVARIANT(out.size() <= bound, "merged horizon exceeds 2(m+n) vertex bound");
  return out;
}

// Linear-time classification of t-sorted screen points against a horizon.
// A point is visible unless the horizon is strictly above it; with
// strict_occlusion, ties also occlude. Agrees with horizon_query pointwise.
inline std::vector<std::uint8_t> classify_against_horizon(const std::vector<ScreenPoint>& pts,
                                                          const Horizon& H,
                                                          bool strict_occlusion = false) {
  std::vector<std::uint8_t> vis(pts.size(), 1);
  std::size_t k = 0, sp = 0;
  for (std::size_t idx = 0; idx < pts.size(); ++idx) {
    VS_INVARIANT(idx == 0 || pts[idx - 1].t <= pts[idx].t,
                 "classify requires t-sorted points");
    double cover = kNegInf;
    if (!H.v.empty()) cover = detail::span_value_at(H.v, pts[idx].t, k);
    while (sp < H.spikes.size() && H.spikes[sp].t < pts[idx].t) ++sp;
    if (sp < H.spikes.size() && H.spikes[sp].t == pts[idx].t)
      cover = std::max(cover, H.spikes[sp].h);
    bool occluded = strict_occlusion ? (cover >= pts[idx].h) : (cover > pts[idx].h);
    vis[idx] = occluded ? 0 : 1;
  }
  return vis;
}

}  // namespace viewshed
