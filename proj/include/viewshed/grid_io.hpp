#pragma once

#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "grid.hpp"

namespace viewshed {

static_assert(std::endian::native == std::endian::little,
              "grid files are little-endian; big-endian hosts are unsupported");

enum class GridFormat { ASC, RAW };

inline GridFormat format_from_path(const std::string& path) {
  auto dot = path.find_last_of('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == "asc" || ext == "agr" || ext == "grd") return GridFormat::ASC;
  if (ext == "raw" || ext == "bin") return GridFormat::RAW;
  throw config_error("cannot infer grid format from path: " + path);
}

namespace detail {

constexpr char kRawMagic[4] = {'V', 'S', 'G', 'R'};
constexpr std::uint32_t kRawVersion = 1;
constexpr std::size_t kRawHeaderBytes = 32;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open for reading: " + path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (in.bad()) throw io_error("read failure: " + path);
  return data;
}

inline const char* skip_ws(const char* p, const char* end) {
  while (p != end && std::isspace(static_cast<unsigned char>(*p))) ++p;
  return p;
}

inline const char* parse_double(const char* p, const char* end, double& out,
                                const std::string& path) {
  p = skip_ws(p, end);
  auto res = std::from_chars(p, end, out);
  if (res.ec != std::errc()) throw io_error("malformed number in " + path);
  return res.ptr;
}

// Reads one "key value" header line; returns false once a line does not
// start with a letter (the value block begins there).
inline bool parse_header_line(const char*& p, const char* end, std::string& key,
                              double& value, const std::string& path) {
  const char* q = skip_ws(p, end);
  if (q == end || !std::isalpha(static_cast<unsigned char>(*q))) return false;
  key.clear();
  while (q != end && !std::isspace(static_cast<unsigned char>(*q))) {
    key += static_cast<char>(std::tolower(static_cast<unsigned char>(*q)));
    ++q;
  }
  p = parse_double(q, end, value, path);
  return true;
}

}  // namespace detail

inline Grid load_grid_asc(const std::string& path) {
  std::string data = detail::read_file(path);
  const char* p = data.data();
  const char* end = p + data.size();

  double ncols = -1, nrows = -1, cellsize = 1.0, nodata = -9999.0;
  std::string key;
  double value;
  while (detail::parse_header_line(p, end, key, value, path)) {
    if (key == "ncols") ncols = value;
    else if (key == "nrows") nrows = value;
    else if (key == "cellsize") cellsize = value;
    else if (key == "nodata_value") nodata = value;
    else if (key != "xllcorner" && key != "yllcorner" &&
             key != "xllcenter" && key != "yllcenter")
      throw io_error("unknown header key '" + key + "' in " + path);
  }
  if (ncols < 1 || nrows < 1) throw io_error("missing grid dimensions in " + path);
  if (!(cellsize > 0.0)) throw io_error("non-positive cellsize in " + path);

  Grid g(static_cast<int>(nrows), static_cast<int>(ncols), 0.0f, cellsize);
  g.nodata = static_cast<float>(nodata);
  for (std::size_t k = 0; k < g.size(); ++k) {
    double v;
    p = detail::skip_ws(p, end);
    if (p == end) throw io_error("value count mismatch in " + path);
    p = detail::parse_double(p, end, v, path);
    float f = static_cast<float>(v);
    if (!std::isfinite(f) && !g.is_nodata(f))
      throw io_error("non-finite elevation in " + path);
    g.values[k] = f;
  }
  p = detail::skip_ws(p, end);
  if (p != end) throw io_error("value count mismatch in " + path);
  return g;
}

inline Grid load_grid_raw(const std::string& path) {
  std::string data = detail::read_file(path);
  if (data.size() < detail::kRawHeaderBytes)
    throw io_error("truncated header in " + path);
  const char* p = data.data();
  if (std::memcmp(p, detail::kRawMagic, 4) != 0)
    throw io_error("bad magic in " + path);
  std::uint32_t version, ncols, nrows;
  float cellsize, nodata;
  std::memcpy(&version, p + 4, 4);
  std::memcpy(&ncols, p + 8, 4);
  std::memcpy(&nrows, p + 12, 4);
  std::memcpy(&cellsize, p + 16, 4);
  std::memcpy(&nodata, p + 20, 4);
  if (version != detail::kRawVersion)
    throw io_error("unsupported version in " + path);
  if (ncols == 0 || nrows == 0) throw io_error("empty grid in " + path);
  if (!(cellsize > 0.0f)) throw io_error("non-positive cellsize in " + path);

  std::size_t n = static_cast<std::size_t>(ncols) * static_cast<std::size_t>(nrows);
  if (data.size() - detail::kRawHeaderBytes != n * 4)
    throw io_error("value count mismatch in " + path);
  Grid g(static_cast<int>(nrows), static_cast<int>(ncols), 0.0f,
         static_cast<double>(cellsize));
  g.nodata = nodata;
  std::memcpy(g.values.data(), p + detail::kRawHeaderBytes, n * 4);
  for (float f : g.values)
    if (!std::isfinite(f) && !g.is_nodata(f))
      throw io_error("non-finite elevation in " + path);
  return g;
}

inline Grid load_grid(const std::string& path, GridFormat fmt) {
  return fmt == GridFormat::ASC ? load_grid_asc(path) : load_grid_raw(path);
}

inline Grid load_grid(const std::string& path) {
  return load_grid(path, format_from_path(path));
}

inline void store_grid_asc(const std::string& path, const Grid& g) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw io_error("cannot open for writing: " + path);
  std::fprintf(f,
               "ncols %d\nnrows %d\nxllcorner 0.0\nyllcorner 0.0\n"
               "cellsize %.17g\nNODATA_value %.9g\n",
               g.ncols, g.nrows, g.cell_spacing, static_cast<double>(g.nodata));
  for (int i = 0; i < g.nrows; ++i) {
    for (int j = 0; j < g.ncols; ++j)
      // %.9g renders a float exactly enough to round-trip.
      std::fprintf(f, j ? " %.9g" : "%.9g", static_cast<double>(g.at(i, j)));
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw io_error("write failure: " + path);
}

inline void store_grid_raw(const std::string& path, const Grid& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open for writing: " + path);
  char header[detail::kRawHeaderBytes] = {};
  std::memcpy(header, detail::kRawMagic, 4);
  std::uint32_t version = detail::kRawVersion;
  std::uint32_t ncols = static_cast<std::uint32_t>(g.ncols);
  std::uint32_t nrows = static_cast<std::uint32_t>(g.nrows);
  float cellsize = static_cast<float>(g.cell_spacing);
  float nodata = g.nodata;
  std::memcpy(header + 4, &version, 4);
  std::memcpy(header + 8, &ncols, 4);
  std::memcpy(header + 12, &nrows, 4);
  std::memcpy(header + 16, &cellsize, 4);
  std::memcpy(header + 20, &nodata, 4);
  out.write(header, detail::kRawHeaderBytes);
  out.write(reinterpret_cast<const char*>(g.values.data()),
            static_cast<std::streamsize>(g.size() * 4));
  out.close();
  if (!out) throw io_error("write failure: " + path);
}

inline void store_grid(const std::string& path, const Grid& g, GridFormat fmt) {
  if (fmt == GridFormat::ASC) store_grid_asc(path, g);
  else store_grid_raw(path, g);
}

inline void store_grid(const std::string& path, const Grid& g) {
  store_grid(path, g, format_from_path(path));
}

// Binary PGM: VISIBLE=255, INVISIBLE=0, NODATA=128.
inline void write_pgm(const std::string& path, const VisibilityGrid& vis) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open for writing: " + path);
  out << "P5\n" << vis.ncols << " " << vis.nrows << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(vis.ncols));
  for (int i = 0; i < vis.nrows; ++i) {
    for (int j = 0; j < vis.ncols; ++j) {
      Flag f = vis.at(i, j);
      row[static_cast<std::size_t>(j)] =
          f == Flag::VISIBLE ? 255 : (f == Flag::NODATA ? 128 : 0);
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  out.close();
  if (!out) throw io_error("write failure: " + path);
}

}  // namespace viewshed
