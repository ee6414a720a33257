#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace viewshed {

// Error taxonomy. The CLI maps these to distinct exit codes; library code
// throws and never calls exit().
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class invariant_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Always-on internal consistency check (not disabled by NDEBUG).
#define VS_INVARIANT(cond, msg)                       \
  do {                                                \
    if (!(cond)) throw ::viewshed::invariant_error(msg); \
  } while (0)

enum class Flag : std::uint8_t {
  INVISIBLE = 0,
  VISIBLE = 1,
  NODATA = 2,
};

// Row-major elevation raster. Row 0 is the northernmost row, so the
// northing of row i decreases as i grows; column j grows eastward.
template <typename T = float>
struct BasicGrid {
  int nrows = 0;
  int ncols = 0;
  double cell_spacing = 1.0;  // edge length of one cell, > 0
  T nodata = T(-9999);
  std::vector<T> values;  // nrows*ncols, row-major

  BasicGrid() = default;
  BasicGrid(int rows, int cols, T fill = T(0), double spacing = 1.0)
      : nrows(rows), ncols(cols), cell_spacing(spacing),
        values(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {
    if (rows <= 0 || cols <= 0) throw config_error("grid dimensions must be positive");
    if (!(spacing > 0.0)) throw config_error("cell spacing must be positive");
  }

  std::size_t size() const { return values.size(); }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(ncols) +
           static_cast<std::size_t>(j);
  }

  bool in_grid(int i, int j) const {
    return i >= 0 && i < nrows && j >= 0 && j < ncols;
  }

  T at(int i, int j) const { return values[index(i, j)]; }
  T& at(int i, int j) { return values[index(i, j)]; }

  bool is_nodata(T v) const {
    if (std::isnan(static_cast<double>(nodata))) return std::isnan(static_cast<double>(v));
    return v == nodata;
  }

  bool nodata_at(int i, int j) const { return is_nodata(at(i, j)); }
};

using Grid = BasicGrid<float>;

struct Viewpoint {
  int row = 0;
  int col = 0;
  double height_offset = 0.0;  // added to the terrain elevation at (row, col)
};

// Throws config_error unless v lies in the grid on a data cell.
template <typename T>
inline void validate_viewpoint(const BasicGrid<T>& g, const Viewpoint& v) {
  if (!g.in_grid(v.row, v.col)) throw config_error("viewpoint outside grid");
  if (g.nodata_at(v.row, v.col)) throw config_error("viewpoint on a nodata cell");
}

// Eye elevation: terrain at v plus the offset.
template <typename T>
inline double eye_elevation(const BasicGrid<T>& g, const Viewpoint& v) {
  validate_viewpoint(g, v);
  return static_cast<double>(g.at(v.row, v.col)) + v.height_offset;
}

struct VisibilityGrid {
  int nrows = 0;
  int ncols = 0;
  std::vector<Flag> flags;

  VisibilityGrid() = default;
  VisibilityGrid(int rows, int cols, Flag fill = Flag::INVISIBLE)
      : nrows(rows), ncols(cols),
        flags(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {}

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(ncols) +
           static_cast<std::size_t>(j);
  }

  Flag at(int i, int j) const { return flags[index(i, j)]; }
  Flag& at(int i, int j) { return flags[index(i, j)]; }

  std::size_t visible_count() const {
    std::size_t n = 0;
    for (Flag f : flags) n += (f == Flag::VISIBLE) ? 1 : 0;
    return n;
  }
};

// The L-infinity ring index of (i,j) around v; ring 0 is the viewpoint itself.
inline int ring_of(const Viewpoint& v, int i, int j) {
  int di = i - v.row;
  int dj = j - v.col;
  if (di < 0) di = -di;
  if (dj < 0) dj = -dj;
  return di > dj ? di : dj;
}

// Largest ring index that still intersects the grid.
template <typename T>
inline int max_ring(const BasicGrid<T>& g, const Viewpoint& v) {
  int a = v.row;
  int b = g.nrows - 1 - v.row;
  int c = v.col;
  int d = g.ncols - 1 - v.col;
  int m = a;
  if (b > m) m = b;
  if (c > m) m = c;
  if (d > m) m = d;
  return m;
}

}  // namespace viewshed
