#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "viewshed/geometry.hpp"

using namespace viewshed;

using Catch::Approx;

namespace {

// Wrapped direction angle in [0, 2pi), the floating-point mirror of the
// integer azimuth order on quadrants 0..3.
double wrapped_angle(double x, double y) {
  double a = std::atan2(y, x);
  if (a < 0.0) a += kTwoPi;
  return a;
}

}  // namespace

TEST_CASE("azimuth quadrants by compass direction") {
  CHECK(azimuth_quadrant(2, 0) == 0);   // E
  CHECK(azimuth_quadrant(2, 2) == 0);   // NE
  CHECK(azimuth_quadrant(0, 2) == 1);   // N
  CHECK(azimuth_quadrant(-2, 2) == 1);  // NW
  CHECK(azimuth_quadrant(-2, 0) == 2);  // W
  CHECK(azimuth_quadrant(-2, -2) == 2); // SW
  CHECK(azimuth_quadrant(0, -2) == 3);  // S
  CHECK(azimuth_quadrant(2, -2) == 3);  // SE
}

TEST_CASE("azimuth order matches angular order") {
  std::mt19937_64 rng(2024);
  auto draw = [&] {
    std::int32_t x = 0, y = 0;
    while (x == 0 && y == 0) {
      x = static_cast<std::int32_t>(rng() % 201) - 100;
      y = static_cast<std::int32_t>(rng() % 201) - 100;
    }
    return make_azimuth_key(x, y);
  };
  for (int trial = 0; trial < 100000; ++trial) {
    AzimuthKey a = draw(), b = draw();
    double aa = wrapped_angle(a.x, a.y);
    double ab = wrapped_angle(b.x, b.y);
    int c = compare_azimuth(a, b);
    if (c == 0) {
      // Collinear, same direction.
      REQUIRE(static_cast<std::int64_t>(a.x) * b.y ==
              static_cast<std::int64_t>(a.y) * b.x);
      REQUIRE(aa == Approx(ab).margin(1e-12));
    } else if (std::abs(aa - ab) > 1e-12) {
      REQUIRE((c < 0) == (aa < ab));
    }
  }
}

TEST_CASE("azimuth radians at the axes") {
  CHECK(azimuth_radians(make_azimuth_key(2, 0)) == 0.0);
  CHECK(azimuth_radians(make_azimuth_key(0, 2)) == Approx(kPi / 2));
  CHECK(azimuth_radians(make_azimuth_key(-2, 0)) == Approx(kPi));
  CHECK(azimuth_radians(make_azimuth_key(0, -2)) == Approx(3 * kPi / 2));
  AzimuthKey pre{-1, 9, -1};
  CHECK(azimuth_radians(pre) == Approx(-std::atan(1.0 / 9.0)));
  CHECK(pre < make_azimuth_key(2, 0));
}

TEST_CASE("cell events: eastern half-row straddles azimuth zero") {
  Viewpoint v{10, 10, 0.0};
  CellEvents ev = cell_events(v, 10, 15);  // due east, 5 cells out
  CHECK(ev.enter.azimuth.quadrant == -1);
  CHECK(ev.enter.azimuth.x == 9);
  CHECK(ev.enter.azimuth.y == -1);
  CHECK(azimuth_radians(ev.enter.azimuth) == Approx(-0.11065722117389565));
  CHECK(ev.center.azimuth == make_azimuth_key(10, 0));
  CHECK(ev.exit.azimuth.x == 9);
  CHECK(ev.exit.azimuth.y == 1);
  CHECK(azimuth_radians(ev.exit.azimuth) == Approx(0.11065722117389565));
  CHECK(ev.center.dist2 == 25);
  CHECK(ev.enter.type == EventType::ENTER);
  CHECK(ev.exit.type == EventType::EXIT);
}

TEST_CASE("cell events: generic cell corners") {
  Viewpoint v{10, 10, 0.0};
  // Offset (east 3, north 2) semantics: row 8, col 13.
  CellEvents ev = cell_events(v, 8, 13);
  CHECK(ev.enter.azimuth == make_azimuth_key(7, 3));
  CHECK(ev.exit.azimuth == make_azimuth_key(5, 5));
  CHECK(azimuth_radians(ev.enter.azimuth) == Approx(std::atan(3.0 / 7.0)));
  CHECK(azimuth_radians(ev.exit.azimuth) == Approx(kPi / 4));
  CHECK(ev.center.dist2 == 13);

  // Due south: the wide corners are the near-side ones.
  ev = cell_events(v, 14, 10);
  CHECK(ev.enter.azimuth == make_azimuth_key(-1, -7));
  CHECK(ev.exit.azimuth == make_azimuth_key(1, -7));
}

TEST_CASE("cell events sandwich the center strictly") {
  Viewpoint v{10, 10, 0.0};
  for (int i = 0; i < 21; ++i)
    for (int j = 0; j < 21; ++j) {
      if (i == v.row && j == v.col) continue;
      CellEvents ev = cell_events(v, i, j);
      REQUIRE(compare_azimuth(ev.enter.azimuth, ev.center.azimuth) < 0);
      REQUIRE(compare_azimuth(ev.center.azimuth, ev.exit.azimuth) < 0);
      REQUIRE(ev.enter.dist2 == dist2_of(v, i, j));
      if (i == v.row && j > v.col) {
        REQUIRE(ev.enter.azimuth.quadrant == -1);
        // The east neighbor's entry corner sits exactly at -pi/4.
        REQUIRE(azimuth_radians(ev.enter.azimuth) >= -kPi / 4);
        REQUIRE(azimuth_radians(ev.enter.azimuth) < 0.0);
      } else {
        REQUIRE(ev.enter.azimuth.quadrant >= 0);
      }
    }
}

TEST_CASE("event tie order at equal azimuth is exit, center, enter") {
  Viewpoint v{5, 5, 0.0};
  // The east neighbor's exit corner, the NE neighbor's center, and the
  // (1,2)-offset cell's enter corner are all collinear at azimuth pi/4.
  Event exit_ev = cell_events(v, 5, 6).exit;
  Event center_ev = cell_events(v, 4, 6).center;
  Event enter_ev = cell_events(v, 3, 6).enter;
  REQUIRE(compare_azimuth(exit_ev.azimuth, center_ev.azimuth) == 0);
  REQUIRE(compare_azimuth(center_ev.azimuth, enter_ev.azimuth) == 0);
  CHECK(event_less(exit_ev, center_ev));
  CHECK(event_less(center_ev, enter_ev));
  CHECK(event_less(exit_ev, enter_ev));
  CHECK_FALSE(event_less(center_ev, exit_ev));
  CHECK_FALSE(event_less(enter_ev, center_ev));
  // Equal azimuth and type break ties by distance.
  Event near_center = cell_events(v, 4, 6).center;
  Event far_center = cell_events(v, 3, 7).center;
  CHECK(event_less(near_center, far_center));
}

TEST_CASE("elevation key values and scaling") {
  CHECK(elev_key(5.0, 25, 1.0) == 1.0);
  CHECK(elev_key(-5.0, 25, 1.0) == -1.0);
  CHECK(elev_key(0.0, 7, 3.0) == 0.0);
  CHECK(elev_key(3.0, 9, 1.0) == 1.0);
  CHECK(elev_key(1.0, 4, 1.0) == 0.25);
  CHECK(elev_key(5.0, 25, 2.0) == 0.25);  // doubling spacing quarters the key
}

TEST_CASE("elevation key orders like the vertical angle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dz_draw(-50.0, 50.0);
  std::uniform_int_distribution<std::int64_t> d2_draw(1, 20000);
  const double spacing = 2.5;
  for (int trial = 0; trial < 100000; ++trial) {
    double dza = dz_draw(rng), dzb = dz_draw(rng);
    std::int64_t d2a = d2_draw(rng), d2b = d2_draw(rng);
    double ka = elev_key(dza, d2a, spacing);
    double kb = elev_key(dzb, d2b, spacing);
    double aa = std::atan2(dza, std::sqrt(static_cast<double>(d2a)) * spacing);
    double ab = std::atan2(dzb, std::sqrt(static_cast<double>(d2b)) * spacing);
    if (std::abs(aa - ab) > 1e-9) {
      REQUIRE((ka < kb) == (aa < ab));
    }
  }
}

TEST_CASE("screen projection of fixed points") {
  ScreenPoint p = screen_project(0.0, -1.0, 3.0);  // due south
  CHECK(p.t == 1.0);
  CHECK(p.h == 3.0);
  p = screen_project(-1.0, 0.0, 0.0);  // due west
  CHECK(p.t == 2.0);
  CHECK(p.h == 0.0);
  p = screen_project(2.0, -2.0, 4.0);  // southeast
  CHECK(p.t == 0.5);
  CHECK(p.h == 1.0);
  p = screen_project(3.0, 4.0, 2.0);  // north-of-east
  CHECK(p.t == Approx(3.0 + 3.0 / 7.0));
  CHECK(p.h == Approx(2.0 / 7.0));
  p = screen_project(1.0, 0.0, -1.0);  // due east pins the seam at t = 0
  CHECK(p.t == 0.0);
  CHECK(p.h == -1.0);
  p = screen_project(0.0, 1.0, 1.0);  // due north
  CHECK(p.t == 3.0);
  CHECK(p.h == 1.0);
}

TEST_CASE("screen t decreases as the direction angle grows") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> coord(-20.0, 20.0);
  auto draw = [&] {
    for (;;) {
      double x = coord(rng), y = coord(rng);
      if (std::abs(x) + std::abs(y) < 1e-6) continue;
      if (y == 0.0 && x > 0.0) continue;  // exclude the seam itself
      return std::pair<double, double>(x, y);
    }
  };
  for (int trial = 0; trial < 100000; ++trial) {
    auto [xa, ya] = draw();
    auto [xb, yb] = draw();
    double aa = wrapped_angle(xa, ya);
    double ab = wrapped_angle(xb, yb);
    double ta = screen_project(xa, ya, 0.0).t;
    double tb = screen_project(xb, yb, 0.0).t;
    REQUIRE(ta > 0.0);
    REQUIRE(ta < 4.0);
    if (std::abs(aa - ab) > 1e-12) {
      REQUIRE((aa < ab) == (ta > tb));
    }
  }
}

TEST_CASE("grid point projection uses true distances") {
  BasicGrid<float> g(5, 5, 0.0f, 2.0);  // spacing 2
  g.at(1, 4) = 6.0f;
  Viewpoint v{3, 2, 1.0};
  double eye_z = 1.0;
  // Offset east 2, north 2 -> x = 4, y = 4; dz = 5.
  ScreenPoint p = project_grid_point(g, v, eye_z, 1, 4);
  CHECK(p.t == Approx(3.5));
  CHECK(p.h == Approx(5.0 / 8.0));
}

TEST_CASE("segment height interpolation") {
  ScreenPoint a{1.0, 2.0}, b{3.0, 6.0};
  CHECK(lerp_h(a, b, 1.0) == 2.0);
  CHECK(lerp_h(a, b, 3.0) == 6.0);
  CHECK(lerp_h(a, b, 2.0) == Approx(4.0));
  CHECK(lerp_h(a, b, 1.5) == Approx(3.0));
}

TEST_CASE("ring walk order and geometry") {
  Viewpoint v{10, 10, 0.0};
  for (int l : {1, 2, 5}) {
    std::vector<RingPos> pts;
    ring_walk(v, l, [&](int i, int j) { pts.push_back(RingPos{i, j}); });
    REQUIRE(pts.size() == static_cast<std::size_t>(8 * l));
    REQUIRE(pts[0].i == v.row);
    REQUIRE(pts[0].j == v.col + l);  // starts due east
    double prev_t = -1.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      REQUIRE(ring_of(v, pts[k].i, pts[k].j) == l);
      double t = screen_project(pts[k].j - v.col, v.row - pts[k].i, 0.0).t;
      REQUIRE(t > prev_t);
      prev_t = t;
      const RingPos& a = pts[k];
      const RingPos& b = pts[(k + 1) % pts.size()];
      int di = std::abs(a.i - b.i), dj = std::abs(a.j - b.j);
      REQUIRE(std::max(di, dj) == 1);  // consecutive positions are adjacent
    }
    // All positions distinct.
    std::vector<std::pair<int, int>> keyed;
    for (const RingPos& p : pts) keyed.emplace_back(p.i, p.j);
    std::sort(keyed.begin(), keyed.end());
    REQUIRE(std::adjacent_find(keyed.begin(), keyed.end()) == keyed.end());
  }
  int center_hits = 0;
  ring_walk(v, 0, [&](int i, int j) {
    ++center_hits;
    REQUIRE(i == v.row);
    REQUIRE(j == v.col);
  });
  REQUIRE(center_hits == 1);
}

TEST_CASE("tile distance") {
  Viewpoint v{0, 0, 0.0};
  CHECK(tile_dist(v, 2, 2, 3, 3) == 2);
  CHECK(tile_dist(v, 0, 4, 3, 7) == 4);
  CHECK(tile_dist(v, 0, 0, 3, 3) == 0);
  Viewpoint w{5, 5, 0.0};
  CHECK(tile_dist(w, 0, 0, 3, 3) == 2);
  CHECK(tile_dist(w, 0, 0, 9, 9) == 0);
  CHECK(tile_dist(w, 7, 0, 9, 2) == 3);
}

TEST_CASE("segment cell contact: frozen cases") {
  Viewpoint v{5, 5, 0.0};
  // Sightline to the NE diagonal neighbor grazes the east neighbor's corner.
  CHECK(segment_cell_contact(v, 4, 6, 5, 6) == CellContact::GRAZE);
  // Sightline to offset (2,2) passes through the (1,1) cell's interior...
  CHECK(segment_cell_contact(v, 3, 7, 4, 6) == CellContact::PROPER);
  // ...and grazes the corner shared with the cell one row lower.
  CHECK(segment_cell_contact(v, 3, 7, 4, 7) == CellContact::GRAZE);
  // A cell well off the sightline.
  CHECK(segment_cell_contact(v, 5, 7, 3, 6) == CellContact::NONE);
  // Collinear cell between v and p occludes properly.
  CHECK(segment_cell_contact(v, 5, 9, 5, 7) == CellContact::PROPER);
  // The open segment ends at p: cells beyond it are never touched.
  CHECK(segment_cell_contact(v, 5, 7, 5, 9) == CellContact::NONE);
  // Shallow diagonal clipping a same-row neighbor's square.
  CHECK(segment_cell_contact(v, 4, 15, 5, 10) == CellContact::PROPER);
}

TEST_CASE("segment cell contact agrees with floating-point clipping") {
  std::mt19937_64 rng(4242);
  auto cell_draw = [&] {
    return std::pair<int, int>(static_cast<int>(rng() % 41),
                               static_cast<int>(rng() % 41));
  };
  Viewpoint v{20, 20, 0.0};
  int proper = 0, none = 0, graze = 0;
  for (int trial = 0; trial < 200000; ++trial) {
    auto [pi, pj] = cell_draw();
    auto [qi, qj] = cell_draw();
    if ((pi == v.row && pj == v.col) || (qi == v.row && qj == v.col) ||
        (pi == qi && pj == qj))
      continue;
    CellContact c = segment_cell_contact(v, pi, pj, qi, qj);
    if (c == CellContact::GRAZE) ++graze;

    // Slab clipping in doubles; only decisive outcomes are compared.
    double px = 2.0 * (pj - v.col), py = 2.0 * (v.row - pi);
    double qx = 2.0 * (qj - v.col), qy = 2.0 * (v.row - qi);
    double lo = 0.0, hi = 1.0;
    bool empty = false;
    auto clip = [&](double p, double q) {
      if (p == 0.0) {
        if (std::abs(q) > 1.0) empty = true;
        return;
      }
      double a = (q - 1.0) / p, b = (q + 1.0) / p;
      if (a > b) std::swap(a, b);
      lo = std::max(lo, a);
      hi = std::min(hi, b);
    };
    clip(px, qx);
    clip(py, qy);
    if (empty || hi - lo < -1e-9) {
      REQUIRE(c == CellContact::NONE);
      ++none;
    } else if (hi - lo > 1e-9) {
      REQUIRE(c == CellContact::PROPER);
      ++proper;
    }
  }
  // The trial mix must actually exercise all three outcomes.
  REQUIRE(proper > 1000);
  REQUIRE(none > 1000);
  REQUIRE(graze > 50);
}
