// Synthetic terrain generator. Emits .asc or .raw grids for the viewshed
// driver and the test harnesses; every surface is deterministic in the seed.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "viewshed/grid_io.hpp"
#include "viewshed/terrain.hpp"

int main(int argc, char** argv) {
  CLI::App app{"synthetic elevation grid generator"};

  std::string kind = "flat";
  std::string out_path;
  viewshed::TerrainSpec spec;
  spec.nrows = 0;
  spec.ncols = 0;
  std::vector<int> wall_rect;

  app.add_option("--kind", kind,
                 "flat|cone-up|cone-down|wall|random-smooth|random-iid")
      ->required();
  app.add_option("--nrows", spec.nrows, "grid rows")->required();
  app.add_option("--ncols", spec.ncols, "grid columns")->required();
  app.add_option("--out", out_path, "output path (.asc or .raw)")->required();
  app.add_option("--seed", spec.seed, "random seed");
  app.add_option("--spacing", spec.cell_spacing, "cell edge length");
  app.add_option("--height", spec.height, "flat level / wall base level");
  app.add_option("--slope", spec.slope, "cone rise per ring");
  app.add_option("--amplitude", spec.amplitude, "random surface vertical scale");
  app.add_option("--features", spec.features, "smooth surface bump count");
  app.add_option("--wall-height", spec.wall_height, "wall block level");
  app.add_option("--wall-rect", wall_rect,
                 "wall extent as row0 col0 row1 col1, inclusive")
      ->expected(4);
  app.add_option("--nodata-rects", spec.nodata_rects,
                 "random rectangles punched to nodata");
  app.add_option("--nodata-fraction", spec.nodata_fraction,
                 "iid per-cell nodata probability");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    spec.kind = viewshed::terrain_kind_from_string(kind);
    if (!wall_rect.empty()) {
      spec.wall_row0 = wall_rect[0];
      spec.wall_col0 = wall_rect[1];
      spec.wall_row1 = wall_rect[2];
      spec.wall_col1 = wall_rect[3];
    }
    viewshed::Grid g = viewshed::generate(spec);
    viewshed::store_grid(out_path, g);
    std::printf("path=%s\nnrows=%d\nncols=%d\ncells=%zu\n", out_path.c_str(),
                g.nrows, g.ncols, g.size());
    return 0;
  } catch (const viewshed::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const viewshed::io_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
}
