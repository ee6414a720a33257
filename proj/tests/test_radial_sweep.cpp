#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <vector>

#include "viewshed/oracles.hpp"
#include "viewshed/radial_sweep.hpp"
#include "viewshed/terrain.hpp"

using namespace viewshed;

namespace {

Grid make_random(int rows, int cols, std::uint64_t seed, double nodata_fraction = 0.0) {
  TerrainSpec spec;
  spec.kind = TerrainKind::RANDOM_IID;
  spec.nrows = rows;
  spec.ncols = cols;
  spec.seed = seed;
  spec.amplitude = 25.0;
  spec.nodata_fraction = nodata_fraction;
  return generate(spec);
}

Grid make_indexed(int rows, int cols) {
  Grid g(rows, cols, 0.0f, 1.0);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) g.at(i, j) = static_cast<float>(i * cols + j);
  return g;
}

bool flags_equal(const VisibilityGrid& a, const VisibilityGrid& b) {
  if (a.nrows != b.nrows || a.ncols != b.ncols) return false;
  for (std::size_t x = 0; x < a.flags.size(); ++x)
    if (a.flags[x] != b.flags[x]) return false;
  return true;
}

}  // namespace

TEST_CASE("active structure answers closer-and-at-least queries") {
  ActiveStructure a;
  CHECK(active_query(a, 9, 0.5));  // empty: everything visible

  active_insert(a, 4, 1.0, 0, 2);
  active_insert(a, 16, 0.2, 0, 4);
  CHECK_FALSE(active_query(a, 9, 0.5));  // entry at 4 has 1.0 >= 0.5
  CHECK(active_query(a, 9, 1.5));
  CHECK(active_query(a, 4, 2.0));        // own distance is not "closer"
  CHECK_FALSE(active_query(a, 16, 1.0)); // tie occludes: 1.0 >= 1.0
  CHECK(a.key_of(16) == 0.2);

  active_delete(a, 4, 0, 2);
  CHECK(active_query(a, 9, 0.5));
  CHECK_THROWS_AS(active_delete(a, 4, 0, 2), invariant_error);
  active_insert(a, 4, 0.7, 0, 2);
  CHECK_THROWS_AS(active_insert(a, 4, 0.9, 2, 0), invariant_error);
}

TEST_CASE("active structure matches a linear scan over random op sequences") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> kd(-3.0, 3.0);
  ActiveStructure a;
  std::map<std::int64_t, double> shadow;
  for (int op = 0; op < 10000; ++op) {
    int what = static_cast<int>(rng() % 3);
    std::int64_t d2 = 1 + static_cast<std::int64_t>(rng() % 400);
    if (what == 0 && !shadow.count(d2)) {
      double k = kd(rng);
      a.insert(d2, k, 0, static_cast<int>(d2));
      shadow[d2] = k;
    } else if (what == 1 && !shadow.empty()) {
      auto it = shadow.lower_bound(d2);
      if (it == shadow.end()) it = shadow.begin();
      a.erase(it->first, 0, static_cast<int>(it->first));
      shadow.erase(it);
    } else {
      double key = kd(rng);
      bool want = true;
      for (const auto& [sd, sk] : shadow)
        if (sd < d2 && sk >= key) want = false;
      CHECK(active_query(a, d2, key) == want);
      REQUIRE(a.size() == shadow.size());
    }
  }
}

TEST_CASE("band lists cover each point once in enter order") {
  Grid g = make_indexed(5, 5);
  Viewpoint v{2, 2, 0.0};
  RadialBands b = radial_build_bands(g, v, 2);
  REQUIRE(b.bands() == 1);
  REQUIRE(b.e[0].size() == 24);
  CHECK(b.e[0][0] == g.at(2, 3));  // due east, distance 1, enters first

  RadialBands b1 = radial_build_bands(g, v, 1);
  REQUIRE(b1.bands() == 2);
  CHECK(b1.e[0].size() == 8);
  CHECK(b1.e[1].size() == 16);
  CHECK(b1.e[0][0] == g.at(2, 3));
  CHECK(b1.e[1][0] == g.at(2, 4));

  // every non-viewpoint value appears exactly once, and each band's enter
  // azimuths are strictly increasing under the full event order
  for (const RadialBands& rb : {b, b1}) {
    std::vector<float> all;
    for (const auto& band : rb.e) {
      for (std::size_t x = 1; x < band.size(); ++x) {
        int pi = static_cast<int>(band[x - 1]) / 5, pj = static_cast<int>(band[x - 1]) % 5;
        int ci = static_cast<int>(band[x]) / 5, cj = static_cast<int>(band[x]) % 5;
        CHECK(event_less(cell_events(v, pi, pj).enter, cell_events(v, ci, cj).enter));
      }
      all.insert(all.end(), band.begin(), band.end());
    }
    std::sort(all.begin(), all.end());
    REQUIRE(all.size() == 24);
    std::size_t x = 0;
    for (int val = 0; val < 25; ++val) {
      if (val == 12) continue;  // the viewpoint
      CHECK(all[x++] == static_cast<float>(val));
    }
  }

  // off-center viewpoint: still a partition, still ordered
  Grid g2 = make_indexed(7, 5);
  Viewpoint v2{1, 1, 0.0};
  RadialBands b2 = radial_build_bands(g2, v2, 2);
  std::size_t total = 0;
  for (const auto& band : b2.e) total += band.size();
  CHECK(total == 34);
  CHECK(b2.rings == 5);
}

TEST_CASE("band width follows the tile budget") {
  CHECK(band_width_for_budget(0) == 1);
  CHECK(band_width_for_budget(374) == 1);
  CHECK(band_width_for_budget(375) == 2);   // (2*2+1)^2 * 5 * 3
  CHECK(band_width_for_budget(1215) == 4);  // (2*4+1)^2 * 5 * 3
  CHECK(band_width_for_budget(4335) == 8);
}

TEST_CASE("banded sweep equals the unit-cell oracle") {
  TerrainSpec flat;
  flat.kind = TerrainKind::FLAT;
  flat.nrows = flat.ncols = 7;
  flat.height = 2.0;
  Grid gf = generate(flat);
  Viewpoint vf{3, 3, 0.0};
  CHECK(flags_equal(sweep_banded(gf, vf, 100), vk_viewshed(gf, vf)));

  TerrainSpec cone;
  cone.kind = TerrainKind::CONE_DOWN;
  cone.nrows = cone.ncols = 9;
  cone.slope = 1.5;
  Grid gc = generate(cone);
  Viewpoint vc{4, 4, 0.0};
  VisibilityGrid down = sweep_banded(gc, vc, 100);
  // ring-graded cone: every cell past ring 1 ties with a same-ray cell one
  // ring in, and ties occlude, so only the apex and ring 1 stay visible
  CHECK(down.visible_count() == 9);
  CHECK(flags_equal(down, vk_viewshed(gc, vc)));

  int trial = 0;
  for (std::uint64_t seed : {11u, 12u, 13u, 14u, 15u}) {
    double nodata = (trial % 2 == 1) ? 0.1 : 0.0;
    Grid g = make_random(15, 15, seed, nodata);
    Viewpoint v{trial == 2 ? 0 : 7, trial == 3 ? 14 : 7, trial % 2 ? 1.0 : 0.0};
    if (g.nodata_at(v.row, v.col)) {
      ++trial;
      continue;
    }
    VisibilityGrid want = vk_viewshed(g, v);
    for (std::size_t budget : {100u, 500u, 2000u}) {  // w = 1, 2, 4
      SweepDiag diag;
      VisibilityGrid got = sweep_banded(g, v, budget, nullptr, &diag);
      CHECK(diag.band_width == (budget == 100 ? 1 : budget == 500 ? 2 : 4));
      CHECK(flags_equal(got, want));
    }
    ++trial;
  }
}

TEST_CASE("sweep processes three events per cell within size bounds") {
  Grid g = make_random(15, 15, 77, 0.05);
  Viewpoint v{7, 7, 0.0};
  SweepDiag diag;
  sweep_banded(g, v, 500, nullptr, &diag);
  CHECK(diag.events == 3 * (15 * 15 - 1));
  CHECK(diag.max_queue <= 3 * 7);
  CHECK(diag.max_active <= 2 * 15);

  SweepDiag sd;
  sweep_sectored_capacity(g, v, 40, nullptr, &sd);
  CHECK(sd.events == 3 * (15 * 15 - 1));
  CHECK(sd.max_active <= 2 * 15);

  // corner viewpoint: rings clip to arcs, the walk skips them silently
  Viewpoint c{0, 0, 0.0};
  SweepDiag cd;
  VisibilityGrid got = sweep_banded(g, c, 500, nullptr, &cd);
  CHECK(cd.events == 3 * (15 * 15 - 1));
  CHECK(flags_equal(got, vk_viewshed(g, c)));
}

TEST_CASE("sector boundaries split the enter order by capacity") {
  Viewpoint v{4, 4, 0.0};
  SectorSet s = compute_sector_boundaries(9, 9, v, 30);
  REQUIRE(s.sectors() == 3);
  CHECK(s.counts[0] == 30);
  CHECK(s.counts[1] == 30);
  CHECK(s.counts[2] == 20);
  REQUIRE(s.bounds.size() == 2);

  SectorSet whole = compute_sector_boundaries(9, 9, v, 81);
  CHECK(whole.sectors() == 1);
  CHECK(whole.counts[0] == 80);

  std::int64_t total = 0;
  for (std::int64_t c : s.counts) total += c;
  CHECK(total == 80);

  // capacity may drop below the layer count, down to a single cell per sector
  SectorSet tiny = compute_sector_boundaries(9, 9, v, 3);
  REQUIRE(tiny.sectors() == 27);
  for (std::size_t k = 0; k + 1 < tiny.sectors(); ++k) CHECK(tiny.counts[k] == 3);
  CHECK(tiny.counts.back() == 2);

  CHECK_THROWS_AS(compute_sector_boundaries(9, 9, v, 0), config_error);
}

TEST_CASE("sectored sweep equals banded sweep and the oracle") {
  int trial = 0;
  for (std::uint64_t seed : {21u, 22u, 23u, 24u}) {
    double nodata = (trial == 1 || trial == 3) ? 0.08 : 0.0;
    Grid g = make_random(11, 11, seed, nodata);
    Viewpoint v{trial == 2 ? 10 : 5, 5, 0.5};
    if (g.nodata_at(v.row, v.col)) {
      ++trial;
      continue;
    }
    VisibilityGrid want = vk_viewshed(g, v);
    VisibilityGrid banded = sweep_banded(g, v, 500);
    CHECK(flags_equal(banded, want));
    for (std::int64_t cap : {std::int64_t{1}, std::int64_t{3},
                             std::int64_t{17}, std::int64_t{11 * 11}}) {
      SweepDiag diag;
      VisibilityGrid got = sweep_sectored_capacity(g, v, cap, nullptr, &diag);
      CHECK(flags_equal(got, want));
      if (cap == 11 * 11) CHECK(diag.sectors == 1);
      if (cap == 1) CHECK(diag.sectors == 120);
    }
    ++trial;
  }

  // budget-driven entry point picks a legal capacity
  Grid g = make_random(9, 9, 31);
  Viewpoint v{4, 4, 0.0};
  CHECK(flags_equal(sweep_sectored(g, v, 1000), vk_viewshed(g, v)));
}

TEST_CASE("event trace lists every event in azimuth order") {
  // 24 cells, three events each, plus wrapped re-activations of the two
  // cells east of the viewpoint
  std::string csv = sweep_event_trace(5, 5, Viewpoint{2, 2, 0.0});
  std::istringstream is(csv);
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line == "azimuth,type,i,j");
  int rows = 0;
  double prev = -10.0;
  int enters = 0, centers = 0, exits = 0;
  while (std::getline(is, line)) {
    ++rows;
    std::istringstream ls(line);
    std::string az, type;
    std::getline(ls, az, ',');
    std::getline(ls, type, ',');
    double a = std::stod(az);
    CHECK(a >= prev - 1e-15);
    prev = a;
    if (type == "ENTER") ++enters;
    if (type == "CENTER") ++centers;
    if (type == "EXIT") ++exits;
  }
  CHECK(rows == 3 * 24 + 2);
  CHECK(enters == 24 + 2);
  CHECK(centers == 24);
  CHECK(exits == 24);
}

TEST_CASE("band building reads the input in a single scan") {
  Grid g = make_random(64, 64, 909);
  Viewpoint v{31, 32, 0.0};
  SimulatedIo io(64, 32);
  RadialBands b = radial_build_bands(g, v, 8, &io);
  REQUIRE(b.bands() == 4);
  std::uint64_t n = 64 * 64;
  CHECK(io.stat_of("grid", &IoStats::logical_reads) == n - 1);
  CHECK(io.stat_of("grid", &IoStats::block_loads) == (n + 63) / 64);

  // full simulated run: per-store ledger rows exist and output is unchanged
  SimulatedIo io2(64, 32);
  VisibilityGrid sim = sweep_banded(g, v, 2000, &io2);
  CHECK(flags_equal(sim, sweep_banded(g, v, 2000)));
  CHECK(io2.stat_of("bands", &IoStats::logical_writes) == n - 1);
  CHECK(io2.stat_of("bands", &IoStats::logical_reads) == n - 1);
  CHECK(io2.stat_of("vbands", &IoStats::logical_writes) == n - 1);
  CHECK(io2.stat_of("vis", &IoStats::logical_writes) == n);

  SimulatedIo io3(64, 32);
  VisibilityGrid sim3 = sweep_sectored_capacity(g, v, 500, &io3);
  CHECK(flags_equal(sim3, sim));
  CHECK(io3.stat_of("grid", &IoStats::logical_reads) == n);
  std::uint64_t east = 64 - 1 - 32;  // duplicated straddling cells
  CHECK(io3.stat_of("sectors", &IoStats::logical_writes) == 3 * (n - 1 + east));
  CHECK(io3.stat_of("vis", &IoStats::logical_writes) == n);
}
