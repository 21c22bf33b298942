#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "ealab/fields.hpp"
#include "ealab/io.hpp"

namespace ealab {

namespace {

static_assert(std::endian::native == std::endian::little, "binary grids assume a little-endian host");

std::filesystem::path sidecar_path(const std::filesystem::path& data) {
  auto p = data;
  p.replace_extension(".json");
  return p;
}

// Collapses sorted coordinates into a uniform axis; throws if not uniform.
std::vector<double> unique_axis(std::vector<double> coords, const char* name) {
  std::sort(coords.begin(), coords.end());
  std::vector<double> axis;
  for (double c : coords) {
    if (axis.empty() || std::abs(c - axis.back()) > 1e-9 * (1.0 + std::abs(c))) axis.push_back(c);
  }
  if (axis.size() < 2) throw std::runtime_error(std::string("grid CSV needs >= 2 distinct ") + name + " values");
  const double step = (axis.back() - axis.front()) / static_cast<double>(axis.size() - 1);
  for (std::size_t i = 0; i < axis.size(); ++i) {
    if (std::abs(axis[i] - (axis.front() + step * static_cast<double>(i))) > 1e-6 * step) {
      throw std::runtime_error(std::string("grid CSV ") + name + " values are not uniformly spaced");
    }
  }
  return axis;
}

GridData load_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  struct Row {
    double x, y, u;
  };
  std::vector<Row> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    Row r{};
    if (!(ls >> r.x >> r.y >> r.u)) throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected x,y,u");
    rows.push_back(r);
  }
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    xs.push_back(r.x);
    ys.push_back(r.y);
  }
  const auto ax = unique_axis(xs, "x");
  const auto ay = unique_axis(ys, "y");
  GridData g;
  g.nx = ax.size();
  g.ny = ay.size();
  g.x0 = ax.front();
  g.y0 = ay.front();
  g.dx = ax[1] - ax[0];
  g.dy = ay[1] - ay[0];
  if (rows.size() != g.nx * g.ny) throw std::runtime_error(path + ": rows do not cover a tensor grid");
  g.values.assign(g.nx * g.ny, std::numeric_limits<double>::quiet_NaN());
  for (const auto& r : rows) {
    auto ix = static_cast<std::size_t>(std::lround((r.x - g.x0) / g.dx));
    auto iy = static_cast<std::size_t>(std::lround((r.y - g.y0) / g.dy));
    g.values[iy * g.nx + ix] = r.u;
  }
  for (double v : g.values) {
    if (std::isnan(v)) throw std::runtime_error(path + ": duplicate or missing grid nodes");
  }
  return g;
}

GridData load_binary(const std::string& path) {
  const auto side = sidecar_path(path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(side.string()));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(side.string() + ": " + e.what());
  }
  GridData g;
  try {
    g.nx = meta.at("nx").get<std::size_t>();
    g.ny = meta.at("ny").get<std::size_t>();
    g.x0 = meta.at("x0").get<double>();
    g.y0 = meta.at("y0").get<double>();
    g.dx = meta.at("dx").get<double>();
    g.dy = meta.at("dy").get<double>();
    if (meta.contains("coordinates")) g.coordinates = meta.at("coordinates").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(side.string() + ": " + e.what());
  }
  const std::string raw = read_file(path);
  if (raw.size() != g.nx * g.ny * sizeof(double)) {
    throw std::runtime_error(path + ": size does not match sidecar nx * ny");
  }
  g.values.resize(g.nx * g.ny);
  std::memcpy(g.values.data(), raw.data(), raw.size());
  return g;
}

}  // namespace

GridData load_grid_data(const std::string& path) {
  const auto ext = std::filesystem::path(path).extension().string();
  GridData g = (ext == ".csv") ? load_csv(path) : load_binary(path);
  if (g.nx < 2 || g.ny < 2 || !(g.dx > 0.0) || !(g.dy > 0.0)) throw std::runtime_error(path + ": degenerate grid");
  return g;
}

void save_grid_data(const std::string& path, const GridData& grid) {
  if (grid.values.size() != grid.nx * grid.ny) throw std::invalid_argument("save_grid_data: value count mismatch");
  std::string raw(grid.values.size() * sizeof(double), '\0');
  std::memcpy(raw.data(), grid.values.data(), raw.size());
  write_file_atomic(path, raw);
  nlohmann::ordered_json meta;
  meta["nx"] = grid.nx;
  meta["ny"] = grid.ny;
  meta["x0"] = grid.x0;
  meta["y0"] = grid.y0;
  meta["dx"] = grid.dx;
  meta["dy"] = grid.dy;
  if (grid.coordinates != "cartesian") meta["coordinates"] = grid.coordinates;
  write_file_atomic(sidecar_path(path).string(), meta.dump(2) + "\n");
}

ScalarField grid_field(GridData grid, std::string name) {
  struct Tables {
    GridData g;
    std::vector<double> gx, gy, lap;
  };
  auto t = std::make_shared<Tables>();
  t->g = std::move(grid);
  const GridData& g = t->g;
  const auto nx = static_cast<long>(g.nx);
  const auto ny = static_cast<long>(g.ny);
  auto at = [&g, nx, ny](long ix, long iy) {
    ix = std::clamp(ix, 0L, nx - 1);
    iy = std::clamp(iy, 0L, ny - 1);
    return g.values[static_cast<std::size_t>(iy * nx + ix)];
  };
  t->gx.resize(g.values.size());
  t->gy.resize(g.values.size());
  t->lap.resize(g.values.size());
  for (long iy = 0; iy < ny; ++iy) {
    for (long ix = 0; ix < nx; ++ix) {
      // Central differences inside, one-sided at the edges.
      const long xl = std::max(ix - 1, 0L), xr = std::min(ix + 1, nx - 1);
      const long yl = std::max(iy - 1, 0L), yr = std::min(iy + 1, ny - 1);
      const auto k = static_cast<std::size_t>(iy * nx + ix);
      t->gx[k] = (at(xr, iy) - at(xl, iy)) / (g.dx * static_cast<double>(xr - xl));
      t->gy[k] = (at(ix, yr) - at(ix, yl)) / (g.dy * static_cast<double>(yr - yl));
      const long cx = std::clamp(ix, 1L, nx - 2), cy = std::clamp(iy, 1L, ny - 2);
      const double dxx = nx >= 3 ? (at(cx + 1, iy) - 2.0 * at(cx, iy) + at(cx - 1, iy)) / (g.dx * g.dx) : 0.0;
      const double dyy = ny >= 3 ? (at(ix, cy + 1) - 2.0 * at(ix, cy) + at(ix, cy - 1)) / (g.dy * g.dy) : 0.0;
      t->lap[k] = dxx + dyy;
    }
  }
  auto interp = [t](const std::vector<double>& table, const DomainPoint& p) {
    const GridData& gg = t->g;
    const double fx = std::clamp((p.x[0] - gg.x0) / gg.dx, 0.0, static_cast<double>(gg.nx - 1));
    const double fy = std::clamp((p.y - gg.y0) / gg.dy, 0.0, static_cast<double>(gg.ny - 1));
    const auto ix = std::min(static_cast<std::size_t>(fx), gg.nx - 2);
    const auto iy = std::min(static_cast<std::size_t>(fy), gg.ny - 2);
    const double sx = fx - static_cast<double>(ix);
    const double sy = fy - static_cast<double>(iy);
    auto v = [&](std::size_t i, std::size_t j) { return table[j * gg.nx + i]; };
    return (1 - sx) * (1 - sy) * v(ix, iy) + sx * (1 - sy) * v(ix + 1, iy) + (1 - sx) * sy * v(ix, iy + 1) +
           sx * sy * v(ix + 1, iy + 1);
  };
  ScalarField f;
  f.n = 1;
  f.name = std::move(name);
  f.analytic = false;
  f.u = [t, interp](const DomainPoint& p) { return interp(t->g.values, p); };
  f.grad = [t, interp](const DomainPoint& p) { return Vec{interp(t->gx, p), interp(t->gy, p)}; };
  f.laplacian = [t, interp](const DomainPoint& p) { return interp(t->lap, p); };
  double sup = 0.0;
  for (double v : t->g.values) sup = std::max(sup, std::abs(v));
  f.sup_norm_hint = sup;
  return f;
}

}  // namespace ealab
