// Viewshed driver. Runs one algorithm over an elevation grid, or several in
// comparison mode, and writes rasters, images, and stats files.
//
// Exit codes: 0 success, 1 configuration error, 2 file I/O error,
// 3 internal invariant violation.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "viewshed/centrifugal.hpp"
#include "viewshed/grid_io.hpp"
#include "viewshed/horizon_sweep.hpp"
#include "viewshed/oracles.hpp"
#include "viewshed/radial_sweep.hpp"

namespace {

using namespace viewshed;

enum class Algo {
  R3,
  VK_ORACLE,
  RADIAL_BANDED,
  RADIAL_SECTORED,
  CENTRIFUGAL,
  VIS_ITER,
  VIS_DAC,
};

Algo algo_from_string(const std::string& s) {
  if (s == "r3") return Algo::R3;
  if (s == "vk-oracle") return Algo::VK_ORACLE;
  if (s == "radial-banded") return Algo::RADIAL_BANDED;
  if (s == "radial-sectored") return Algo::RADIAL_SECTORED;
  if (s == "centrifugal") return Algo::CENTRIFUGAL;
  if (s == "vis-iter") return Algo::VIS_ITER;
  if (s == "vis-dac") return Algo::VIS_DAC;
  throw config_error("unknown algorithm: " + s);
}

// Algorithms that interpolate the sightline take a --model; the unit-cell
// family has its occlusion rule baked in and must not be given one.
bool takes_model(Algo a) {
  return a == Algo::R3 || a == Algo::VIS_ITER || a == Algo::VIS_DAC;
}

Viewpoint parse_viewpoint(const std::string& s) {
  Viewpoint v;
  int used = 0;
  if (std::sscanf(s.c_str(), "%d,%d%n", &v.row, &v.col, &used) == 2 &&
      used == static_cast<int>(s.size()))
    return v;
  if (std::sscanf(s.c_str(), "%d,%d,%lf%n", &v.row, &v.col, &v.height_offset,
                  &used) == 3 &&
      used == static_cast<int>(s.size()))
    return v;
  throw config_error("viewpoint must be row,col or row,col,height: " + s);
}

void parse_simulate_io(const std::string& s, std::size_t& block_bytes,
                       std::size_t& cache_blocks) {
  int used = 0;
  if (std::sscanf(s.c_str(), "%zu,%zu%n", &block_bytes, &cache_blocks, &used) != 2 ||
      used != static_cast<int>(s.size()))
    throw config_error("--simulate-io expects B,M (block bytes, cached blocks)");
  if (block_bytes < sizeof(float) || block_bytes % sizeof(float) != 0)
    throw config_error("--simulate-io block size must be a positive multiple of 4 bytes");
  if (cache_blocks < 1) throw config_error("--simulate-io cache must hold a block");
}

void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open for writing: " + path);
  out << body;
  out.close();
  if (!out) throw io_error("write failure: " + path);
}

// Visibility raster as a grid: VISIBLE=1, INVISIBLE=0, NODATA=nodata value.
Grid visibility_raster(const VisibilityGrid& vis, double spacing) {
  Grid g(vis.nrows, vis.ncols, 0.0f, spacing);
  for (std::size_t k = 0; k < vis.flags.size(); ++k)
    g.values[k] = vis.flags[k] == Flag::VISIBLE
                      ? 1.0f
                      : (vis.flags[k] == Flag::NODATA ? g.nodata : 0.0f);
  return g;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct RunOutput {
  VisibilityGrid vis;
  double runtime_ms = 0.0;
  std::size_t final_horizon_vertices = 0;
  HorizonStats stats;               // vis-iter only
  std::vector<double> slot_values;  // centrifugal only
  std::vector<std::pair<int, int>> visit_order;
};

struct Options {
  Viewpoint v;
  Model model = Model::GRIDLINES;
  std::size_t memory_budget = 256u << 20;
  bool strict_occlusion = false;
  bool want_slots = false;
  bool want_visit_order = false;
};

RunOutput run_algorithm(Algo a, const Grid& g, const Options& opt,
                        SimulatedIo* io) {
  RunOutput out;
  auto t0 = std::chrono::steady_clock::now();
  switch (a) {
    case Algo::R3:
      out.vis = r3_viewshed(g, opt.v, opt.model, opt.strict_occlusion);
      break;
    case Algo::VK_ORACLE:
      out.vis = vk_viewshed(g, opt.v);
      break;
    case Algo::RADIAL_BANDED:
      out.vis = sweep_banded(g, opt.v, opt.memory_budget, io);
      break;
    case Algo::RADIAL_SECTORED:
      out.vis = sweep_sectored(g, opt.v, opt.memory_budget, io);
      break;
    case Algo::CENTRIFUGAL: {
      CentrifugalDiag diag;
      diag.record_slot_values = opt.want_slots;
      diag.record_visit_order = opt.want_visit_order;
      out.vis = centrifugal_sweep(g, opt.v, io, &diag);
      out.slot_values = std::move(diag.slot_values);
      out.visit_order = std::move(diag.visit_order);
      for (double k : out.slot_values)
        if (std::isfinite(k)) ++out.final_horizon_vertices;
      break;
    }
    case Algo::VIS_ITER: {
      std::int64_t cap = std::max<std::int64_t>(
          static_cast<std::int64_t>(opt.memory_budget / sizeof(float)), 1);
      VisIterResult r =
          vis_iter(g, opt.v, cap, opt.model, opt.strict_occlusion, io);
      out.vis = std::move(r.vis);
      out.stats = std::move(r.stats);
      if (!out.stats.layers.empty())
        out.final_horizon_vertices = out.stats.layers.back().cumulative_vertices;
      break;
    }
    case Algo::VIS_DAC: {
      std::int64_t cap = std::max<std::int64_t>(
          static_cast<std::int64_t>(opt.memory_budget / sizeof(float)), 1);
      out.vis = vis_dac(g, opt.v, cap, opt.model, opt.strict_occlusion, io);
      break;
    }
  }
  auto t1 = std::chrono::steady_clock::now();
  out.runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return out;
}

const char* flag_name(Flag f) {
  return f == Flag::VISIBLE ? "VISIBLE"
                            : (f == Flag::NODATA ? "NODATA" : "INVISIBLE");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grid terrain viewshed engine"};

  std::string algorithm, compare_list, model_str, viewpoint_str, simulate_str;
  std::string input_path, output_path, pgm_path;
  std::string horizon_csv, io_csv_path, slot_csv_path, visit_csv_path;
  Options opt;
  double tolerance = 0.0;

  CLI::Option* o_algo = app.add_option(
      "--algorithm", algorithm,
      "r3|vk-oracle|radial-banded|radial-sectored|centrifugal|vis-iter|vis-dac");
  CLI::Option* o_cmp = app.add_option(
      "--compare", compare_list, "comma-separated algorithm list to cross-check");
  o_algo->excludes(o_cmp);
  CLI::Option* o_model =
      app.add_option("--model", model_str, "gridlines|layers");
  app.add_option("--viewpoint", viewpoint_str, "row,col or row,col,height")
      ->required();
  app.add_option("--input", input_path, "elevation grid (.asc or .raw)")
      ->required();
  app.add_option("--output", output_path, "visibility raster (.asc, .raw, .pgm)");
  app.add_option("--pgm", pgm_path, "visibility image");
  app.add_option("--memory-budget", opt.memory_budget, "band/sector budget, bytes");
  CLI::Option* o_sim = app.add_option("--simulate-io", simulate_str,
                                      "B,M: count block transfers with block "
                                      "size B bytes and an M-block cache");
  app.add_option("--tolerance", tolerance,
                 "--compare: allowed disagreement fraction of valid cells");
  app.add_flag("--strict-occlusion", opt.strict_occlusion,
               "grazing sightlines occlude (interpolating algorithms)");
  app.add_option("--horizon-csv", horizon_csv, "per-layer horizon growth table");
  CLI::Option* o_iocsv =
      app.add_option("--io-csv", io_csv_path, "per-store block transfer table");
  o_iocsv->needs(o_sim);
  app.add_option("--slot-csv", slot_csv_path,
                 "final horizon slot table (centrifugal)");
  app.add_option("--record-visit-order", visit_csv_path,
                 "cell visit order table (centrifugal)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    std::vector<Algo> algos;
    std::vector<std::string> names;
    if (o_cmp->count()) {
      std::size_t pos = 0;
      while (pos <= compare_list.size()) {
        std::size_t comma = compare_list.find(',', pos);
        if (comma == std::string::npos) comma = compare_list.size();
        names.push_back(compare_list.substr(pos, comma - pos));
        algos.push_back(algo_from_string(names.back()));
        pos = comma + 1;
      }
      if (algos.size() < 2) throw config_error("--compare needs at least two algorithms");
    } else if (o_algo->count()) {
      names.push_back(algorithm);
      algos.push_back(algo_from_string(algorithm));
    } else {
      throw config_error("one of --algorithm or --compare is required");
    }

    bool any_model = false;
    for (Algo a : algos)
      if (takes_model(a)) any_model = true;
    if (o_model->count()) {
      if (model_str == "gridlines") opt.model = Model::GRIDLINES;
      else if (model_str == "layers") opt.model = Model::LAYERS;
      else throw config_error("unknown model: " + model_str);
      if (!any_model)
        throw config_error("--model applies only to interpolating algorithms");
    } else if (any_model) {
      throw config_error("interpolating algorithms require --model");
    }
    if (opt.memory_budget == 0) throw config_error("memory budget must be positive");
    opt.v = parse_viewpoint(viewpoint_str);
    opt.want_slots = !slot_csv_path.empty();
    opt.want_visit_order = !visit_csv_path.empty();

    SimulatedIo sim;
    SimulatedIo* io = nullptr;
    if (o_sim->count()) {
      std::size_t block_bytes = 0, cache_blocks = 0;
      parse_simulate_io(simulate_str, block_bytes, cache_blocks);
      sim = SimulatedIo(block_bytes / sizeof(float), cache_blocks);
      io = &sim;
    }

    Grid g = load_grid(input_path);

    std::vector<RunOutput> runs;
    std::vector<std::uint64_t> loads;
    for (Algo a : algos) {
      std::uint64_t before = io ? sim.total().block_loads : 0;
      runs.push_back(run_algorithm(a, g, opt, io));
      loads.push_back((io ? sim.total().block_loads : 0) - before);
    }

    for (std::size_t k = 0; k < runs.size(); ++k) {
      std::printf("algorithm=%s\n", names[k].c_str());
      std::printf("visible_count=%zu\nruntime_ms=%.3f\n",
                  runs[k].vis.visible_count(), runs[k].runtime_ms);
      std::printf("block_loads=%llu\n", static_cast<unsigned long long>(loads[k]));
      std::printf("final_horizon_vertices=%zu\n", runs[k].final_horizon_vertices);
    }

    int status = 0;
    if (runs.size() > 1) {
      std::size_t valid = 0;
      for (Flag f : runs[0].vis.flags) valid += (f != Flag::NODATA) ? 1 : 0;
      std::size_t total_diffs = 0;
      for (std::size_t a = 0; a < runs.size(); ++a)
        for (std::size_t b = a + 1; b < runs.size(); ++b) {
          std::size_t diffs = 0;
          const std::size_t cap = 20;
          std::string sample;
          for (int i = 0; i < g.nrows; ++i)
            for (int j = 0; j < g.ncols; ++j) {
              Flag fa = runs[a].vis.at(i, j);
              Flag fb = runs[b].vis.at(i, j);
              if (fa == fb) continue;
              if (diffs < cap) {
                sample += "cell=" + std::to_string(i) + ',' + std::to_string(j);
                sample += ' ' + names[a] + '=' + flag_name(fa);
                sample += ' ' + names[b] + '=' + flag_name(fb) + '\n';
              }
              ++diffs;
            }
          total_diffs += diffs;
          double frac = valid ? static_cast<double>(diffs) / static_cast<double>(valid) : 0.0;
          std::printf("pair=%s,%s disagreements=%zu fraction=%.6f\n",
                      names[a].c_str(), names[b].c_str(), diffs, frac);
          std::fputs(sample.c_str(), stdout);
          if (frac > tolerance) status = 3;
        }
      if (total_diffs == 0) std::printf("IDENTICAL\n");
    }

    const RunOutput& first = runs[0];
    if (!output_path.empty()) {
      if (ends_with(output_path, ".pgm")) write_pgm(output_path, first.vis);
      else store_grid(output_path, visibility_raster(first.vis, g.cell_spacing));
    }
    if (!pgm_path.empty()) write_pgm(pgm_path, first.vis);
    if (!horizon_csv.empty()) write_text_file(horizon_csv, first.stats.csv());
    if (!slot_csv_path.empty()) write_text_file(slot_csv_path, slot_csv(first.slot_values));
    if (!visit_csv_path.empty()) {
      std::string body = "row,col\n";
      for (const auto& [i, j] : first.visit_order)
        body += std::to_string(i) + ',' + std::to_string(j) + '\n';
      write_text_file(visit_csv_path, body);
    }
    if (!io_csv_path.empty()) write_text_file(io_csv_path, io_csv(sim));
    return status;
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const io_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
}
