#pragma once

// Occupancy grid storage, world/grid geometry, ray traversal and map files.
//
// Conventions:
//  - cell (row, col) covers [origin + col*res, origin + (col+1)*res) in x and
//    the matching interval in y; row grows with +y.
//  - probabilities are stored directly (not log-odds) and always clamped to
//    [kProbMin, kProbMax].
//  - files (PGM and ASCII) are written top row first, so file line 0 is grid
//    row height-1.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "coupled_explore/geometry.hpp"

namespace coupled_explore {

inline constexpr double kProbMin = 1e-4;
inline constexpr double kProbMax = 1.0 - kProbMin;
inline constexpr double kProbUnknown = 0.5;

inline double clamp_prob(double p) { return std::clamp(p, kProbMin, kProbMax); }

inline double prob_to_logodds(double p) { return std::log(p / (1.0 - p)); }
inline double logodds_to_prob(double l) { return 1.0 / (1.0 + std::exp(-l)); }

class BoundsError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MapIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CellIndex {
  int row{0};
  int col{0};

  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

struct GridGeometry {
  int width{0};
  int height{0};
  double resolution{0.2};
  Point2 origin{};

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

class OccupancyGrid {
 public:
  OccupancyGrid() = default;

  OccupancyGrid(int width, int height, double resolution, Point2 origin = {},
                double fill = kProbUnknown)
      : geom_{width, height, resolution, origin} {
    if (width <= 0 || height <= 0)
      throw std::invalid_argument("OccupancyGrid: width and height must be positive");
    if (!(resolution > 0.0))
      throw std::invalid_argument("OccupancyGrid: resolution must be positive");
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    probs_.assign(n, clamp_prob(fill));
    hits_.assign(n, 0);
  }

  explicit OccupancyGrid(const GridGeometry& g, double fill = kProbUnknown)
      : OccupancyGrid(g.width, g.height, g.resolution, g.origin, fill) {}

  int width() const { return geom_.width; }
  int height() const { return geom_.height; }
  double resolution() const { return geom_.resolution; }
  Point2 origin() const { return geom_.origin; }
  const GridGeometry& geometry() const { return geom_; }
  std::size_t size() const { return probs_.size(); }

  bool contains(CellIndex c) const {
    return c.row >= 0 && c.col >= 0 && c.row < geom_.height && c.col < geom_.width;
  }

  bool contains(Point2 p) const {
    const double gx = (p.x - geom_.origin.x) / geom_.resolution;
    const double gy = (p.y - geom_.origin.y) / geom_.resolution;
    return gx >= 0.0 && gy >= 0.0 && gx < geom_.width && gy < geom_.height;
  }

  std::size_t index(CellIndex c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(geom_.width) +
           static_cast<std::size_t>(c.col);
  }

  CellIndex cell_at(std::size_t idx) const {
    return {static_cast<int>(idx / static_cast<std::size_t>(geom_.width)),
            static_cast<int>(idx % static_cast<std::size_t>(geom_.width))};
  }

  std::optional<CellIndex> try_world_to_cell(Point2 p) const {
    if (!contains(p)) return std::nullopt;
    const double gx = (p.x - geom_.origin.x) / geom_.resolution;
    const double gy = (p.y - geom_.origin.y) / geom_.resolution;
    return CellIndex{static_cast<int>(std::floor(gy)), static_cast<int>(std::floor(gx))};
  }

  CellIndex world_to_cell(Point2 p) const {
    if (auto c = try_world_to_cell(p)) return *c;
    std::ostringstream os;
    os << "world_to_cell: point (" << p.x << ", " << p.y << ") outside grid extent";
    throw BoundsError(os.str());
  }

  Point2 cell_center(CellIndex c) const {
    return {geom_.origin.x + (c.col + 0.5) * geom_.resolution,
            geom_.origin.y + (c.row + 0.5) * geom_.resolution};
  }

  double prob(CellIndex c) const { return probs_[index(c)]; }
  void set_prob(CellIndex c, double p) { probs_[index(c)] = clamp_prob(p); }

  int hits(CellIndex c) const { return hits_[index(c)]; }
  void set_hits(CellIndex c, int n) { hits_[index(c)] = std::max(n, 0); }

  const std::vector<double>& probs() const { return probs_; }
  const std::vector<int>& hit_counts() const { return hits_; }

  void fill(double p) { std::fill(probs_.begin(), probs_.end(), clamp_prob(p)); }

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  GridGeometry geom_{};
  std::vector<double> probs_;
  std::vector<int> hits_;
};

// Cells associated with one beam. pass_cells are ordered by distance from the
// sensor; hit_cell is the endpoint cell of a beam that read less than z_max.
struct RaySets {
  std::vector<CellIndex> pass_cells;
  std::optional<CellIndex> hit_cell;
  bool truncated{false};
};

namespace detail {

// Amanatides-Woo traversal state in grid units.
struct RayWalker {
  CellIndex cell;
  int step_x{0};
  int step_y{0};
  double t_max_x{std::numeric_limits<double>::infinity()};
  double t_max_y{std::numeric_limits<double>::infinity()};
  double t_delta_x{std::numeric_limits<double>::infinity()};
  double t_delta_y{std::numeric_limits<double>::infinity()};

  RayWalker(const OccupancyGrid& grid, Point2 origin, double angle) {
    cell = grid.world_to_cell(origin);
    const double res = grid.resolution();
    const double dx = std::cos(angle);
    const double dy = std::sin(angle);
    const double gx = (origin.x - grid.origin().x) / res;
    const double gy = (origin.y - grid.origin().y) / res;
    // |d| below this is treated as axis-aligned so cos(pi/2) does not
    // produce spurious steps.
    constexpr double kAxisEps = 1e-12;
    if (dx > kAxisEps) {
      step_x = 1;
      t_max_x = ((cell.col + 1) - gx) * res / dx;
      t_delta_x = res / dx;
    } else if (dx < -kAxisEps) {
      step_x = -1;
      t_max_x = (gx - cell.col) * res / -dx;
      t_delta_x = res / -dx;
    }
    if (dy > kAxisEps) {
      step_y = 1;
      t_max_y = ((cell.row + 1) - gy) * res / dy;
      t_delta_y = res / dy;
    } else if (dy < -kAxisEps) {
      step_y = -1;
      t_max_y = (gy - cell.row) * res / -dy;
      t_delta_y = res / -dy;
    }
  }

  double t_exit() const { return std::min(t_max_x, t_max_y); }

  // Corner crossings (t_max_x == t_max_y) take the x step first.
  void advance() {
    if (t_max_x <= t_max_y) {
      cell.col += step_x;
      t_max_x += t_delta_x;
    } else {
      cell.row += step_y;
      t_max_y += t_delta_y;
    }
  }
};

}  // namespace detail

// Visits every cell the beam touches, in order. visit(cell, is_hit).
// Returns false if the ray left the grid before reaching its endpoint.
template <typename Visitor>
bool for_each_ray_cell(const OccupancyGrid& grid, Point2 origin, double angle, double range,
                       double z_max, Visitor&& visit) {
  if (range < 0.0 || range > z_max)
    throw std::invalid_argument("traverse_ray: range must lie in [0, z_max]");
  detail::RayWalker walker(grid, origin, angle);
  const bool has_hit = range < z_max;
  while (true) {
    if (range < walker.t_exit()) {
      visit(walker.cell, has_hit);
      return true;
    }
    visit(walker.cell, false);
    walker.advance();
    if (!grid.contains(walker.cell)) return false;
  }
}

inline RaySets traverse_ray(const OccupancyGrid& grid, Point2 origin, double angle, double range,
                            double z_max) {
  RaySets out;
  const bool complete =
      for_each_ray_cell(grid, origin, angle, range, z_max, [&](CellIndex c, bool is_hit) {
        if (is_hit)
          out.hit_cell = c;
        else
          out.pass_cells.push_back(c);
      });
  out.truncated = !complete;
  return out;
}

// Distance to the first cell satisfying is_obstacle, measured to the midpoint
// of the ray's chord through that cell, so the reading lands inside the cell
// rather than on its boundary. Returns z_max when nothing is hit in range or
// the ray leaves the grid.
template <typename Pred>
double cast_ray(const OccupancyGrid& grid, Point2 origin, double angle, double z_max,
                Pred&& is_obstacle) {
  detail::RayWalker walker(grid, origin, angle);
  double t_enter = 0.0;
  while (t_enter < z_max) {
    const double t_exit = walker.t_exit();
    if (is_obstacle(walker.cell)) return std::min(0.5 * (t_enter + t_exit), z_max);
    t_enter = t_exit;
    walker.advance();
    if (!grid.contains(walker.cell)) break;
  }
  return z_max;
}

// ---------------------------------------------------------------------------
// Map files

enum class MapFormat { pgm, ascii };

// binary: dark pixels (< 128) are occupied, everything else free, and the
// conventional 205 pixel marks unknown. probability: p = 1 - pixel/255, which
// inverts save_map up to quantisation.
enum class PgmEncoding { binary, probability };

struct MapLoadOptions {
  PgmEncoding encoding{PgmEncoding::binary};
  // Used when no sidecar is present.
  double resolution{0.2};
  Point2 origin{};
};

inline constexpr int kPgmOccupiedBelow = 128;
inline constexpr int kPgmUnknownPixel = 205;

inline std::filesystem::path metadata_path(const std::filesystem::path& map_path) {
  auto p = map_path;
  p += ".meta";
  return p;
}

inline void write_metadata(const GridGeometry& g, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw MapIoError("cannot write map metadata: " + path.string());
  os.precision(17);
  os << "width=" << g.width << "\nheight=" << g.height << "\nresolution=" << g.resolution
     << "\norigin_x=" << g.origin.x << "\norigin_y=" << g.origin.y << "\n";
  if (!os) throw MapIoError("failed writing map metadata: " + path.string());
}

inline std::map<std::string, std::string> read_key_values(std::istream& is,
                                                          const std::string& what) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(what + ": line " + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline std::optional<GridGeometry> read_metadata(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) return std::nullopt;
  const auto kv = read_key_values(is, path.string());
  GridGeometry g;
  try {
    g.width = std::stoi(kv.at("width"));
    g.height = std::stoi(kv.at("height"));
    g.resolution = std::stod(kv.at("resolution"));
    g.origin.x = kv.contains("origin_x") ? std::stod(kv.at("origin_x")) : 0.0;
    g.origin.y = kv.contains("origin_y") ? std::stod(kv.at("origin_y")) : 0.0;
  } catch (const std::exception& e) {
    throw FormatError(path.string() + ": bad metadata (" + e.what() + ")");
  }
  return g;
}

namespace detail {

inline std::string read_pgm_token(std::istream& is, const std::string& path) {
  std::string tok;
  char ch = 0;
  while (is.get(ch)) {
    if (ch == '#') {
      std::string rest;
      std::getline(is, rest);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(ch);
  }
  if (tok.empty())
    throw FormatError(path + ": truncated PGM header at offset " +
                      std::to_string(static_cast<long long>(is.tellg())));
  return tok;
}

inline OccupancyGrid load_pgm(const std::filesystem::path& path, const MapLoadOptions& opts,
                              const std::optional<GridGeometry>& meta) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MapIoError("cannot open map: " + path.string());
  const std::string name = path.string();
  if (read_pgm_token(is, name) != "P5") throw FormatError(name + ": offset 0: expected P5 magic");
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(read_pgm_token(is, name));
    height = std::stoi(read_pgm_token(is, name));
    maxval = std::stoi(read_pgm_token(is, name));
  } catch (const std::invalid_argument&) {
    throw FormatError(name + ": non-numeric PGM header field");
  }
  if (width <= 0 || height <= 0) throw FormatError(name + ": non-positive PGM dimensions");
  if (maxval != 255) throw FormatError(name + ": only maxval 255 is supported");
  std::vector<unsigned char> pixels(static_cast<std::size_t>(width) * height);
  const auto data_offset = static_cast<long long>(is.tellg());
  is.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (is.gcount() != static_cast<std::streamsize>(pixels.size()))
    throw FormatError(name + ": pixel data truncated at offset " +
                      std::to_string(data_offset + is.gcount()));
  const double res = meta ? meta->resolution : opts.resolution;
  const Point2 origin = meta ? meta->origin : opts.origin;
  OccupancyGrid grid(width, height, res, origin);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const int px = pixels[static_cast<std::size_t>(r) * width + c];
      double p;
      if (opts.encoding == PgmEncoding::probability) {
        p = 1.0 - px / 255.0;
      } else if (px == kPgmUnknownPixel) {
        p = kProbUnknown;
      } else {
        p = px < kPgmOccupiedBelow ? kProbMax : kProbMin;
      }
      grid.set_prob({height - 1 - r, c}, p);
    }
  }
  return grid;
}

inline OccupancyGrid load_ascii(const std::filesystem::path& path, const MapLoadOptions& opts,
                                const std::optional<GridGeometry>& meta) {
  std::ifstream is(path);
  if (!is) throw MapIoError("cannot open map: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      if (tok == "?" || tok == "-1") {
        row.push_back(kProbUnknown);
        continue;
      }
      try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size() || v < 0.0 || v > 1.0) throw std::invalid_argument(tok);
        row.push_back(v);
      } catch (const std::exception&) {
        throw FormatError(path.string() + ": line " + std::to_string(lineno) +
                          ": bad cell value '" + tok + "'");
      }
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size())
      throw FormatError(path.string() + ": line " + std::to_string(lineno) + ": expected " +
                        std::to_string(rows.front().size()) + " values, got " +
                        std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError(path.string() + ": empty map");
  const int height = static_cast<int>(rows.size());
  const int width = static_cast<int>(rows.front().size());
  const double res = meta ? meta->resolution : opts.resolution;
  const Point2 origin = meta ? meta->origin : opts.origin;
  OccupancyGrid grid(width, height, res, origin);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) grid.set_prob({height - 1 - r, c}, rows[r][c]);
  return grid;
}

}  // namespace detail

// Reads a PGM (P5) or whitespace-separated ASCII map. A `<path>.meta` sidecar,
// when present, supplies resolution and origin.
inline OccupancyGrid load_map(const std::filesystem::path& path, MapFormat format,
                              const MapLoadOptions& opts = {}) {
  if (!std::filesystem::exists(path)) throw MapIoError("map file not found: " + path.string());
  const auto meta = read_metadata(metadata_path(path));
  OccupancyGrid grid = format == MapFormat::pgm ? detail::load_pgm(path, opts, meta)
                                                : detail::load_ascii(path, opts, meta);
  if (meta && (meta->width != grid.width() || meta->height != grid.height()))
    throw FormatError(path.string() + ": sidecar dimensions disagree with map data");
  return grid;
}

inline MapFormat guess_map_format(const std::filesystem::path& path) {
  return path.extension() == ".pgm" ? MapFormat::pgm : MapFormat::ascii;
}

inline unsigned char prob_to_pixel(double p) {
  // round half up: p = 0.5 -> 127.5 -> 128
  return static_cast<unsigned char>(std::floor(255.0 * (1.0 - p) + 0.5));
}

// Writes a P5 snapshot (dark = occupied) and its metadata sidecar.
inline void save_map(const OccupancyGrid& grid, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw MapIoError("cannot write map: " + path.string());
  os << "P5\n" << grid.width() << " " << grid.height() << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(grid.width()));
  for (int r = grid.height() - 1; r >= 0; --r) {
    for (int c = 0; c < grid.width(); ++c) row[c] = prob_to_pixel(grid.prob({r, c}));
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!os) throw MapIoError("failed writing map: " + path.string());
  write_metadata(grid.geometry(), metadata_path(path));
}

}  // namespace coupled_explore
