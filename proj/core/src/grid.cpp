#include "ealab/grid.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ealab {

AdaptedGrid AdaptedGrid::over_root(const RootCube& root, int depth) {
  if (depth < 0 || depth > 14) throw std::invalid_argument("grid depth must be in [0, 14]");
  AdaptedGrid g;
  g.n = root.origin.size();
  g.origin = Vec(g.n + 1);
  for (int a = 0; a < g.n; ++a) g.origin[a] = root.origin[a];
  g.origin[g.n] = 0.0;
  const std::int64_t cells = std::int64_t{1} << depth;
  for (int a = 0; a <= g.n; ++a) {
    g.count[static_cast<std::size_t>(a)] = cells;
    g.spacing[static_cast<std::size_t>(a)] = root.side / static_cast<double>(cells);
  }
  return g;
}

std::int64_t AdaptedGrid::cells() const {
  std::int64_t total = 1;
  for (int a = 0; a < axes(); ++a) total *= count[static_cast<std::size_t>(a)];
  return total;
}

std::int64_t AdaptedGrid::stride(int axis) const {
  std::int64_t s = 1;
  for (int a = axes() - 1; a > axis; --a) s *= count[static_cast<std::size_t>(a)];
  return s;
}

CellIndex AdaptedGrid::unflatten(std::int64_t flat) const {
  CellIndex idx{};
  for (int a = axes() - 1; a >= 0; --a) {
    auto c = count[static_cast<std::size_t>(a)];
    idx[static_cast<std::size_t>(a)] = flat % c;
    flat /= c;
  }
  return idx;
}

std::int64_t AdaptedGrid::flatten(const CellIndex& idx) const {
  std::int64_t flat = 0;
  for (int a = 0; a < axes(); ++a) flat = flat * count[static_cast<std::size_t>(a)] + idx[static_cast<std::size_t>(a)];
  return flat;
}

Vec AdaptedGrid::center(const CellIndex& idx) const {
  Vec c(axes());
  for (int a = 0; a < axes(); ++a) {
    auto ua = static_cast<std::size_t>(a);
    c[a] = origin[a] + (static_cast<double>(idx[ua]) + 0.5) * spacing[ua];
  }
  return c;
}

Vec AdaptedGrid::center(std::int64_t flat) const { return center(unflatten(flat)); }

double AdaptedGrid::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < axes(); ++a) v *= spacing[static_cast<std::size_t>(a)];
  return v;
}

double AdaptedGrid::face_area(int axis) const {
  double v = 1.0;
  for (int a = 0; a < axes(); ++a) {
    if (a != axis) v *= spacing[static_cast<std::size_t>(a)];
  }
  return v;
}

double AdaptedGrid::half_diagonal() const {
  double s = 0.0;
  for (int a = 0; a < axes(); ++a) s += spacing[static_cast<std::size_t>(a)] * spacing[static_cast<std::size_t>(a)];
  return 0.5 * std::sqrt(s);
}

bool AdaptedGrid::operator==(const AdaptedGrid& other) const {
  return n == other.n && origin == other.origin && count == other.count && spacing == other.spacing;
}

DomainPoint to_cartesian(const LipschitzGraph& graph, const Vec& adapted) {
  const int n = adapted.size() - 1;
  Vec x(n);
  for (int a = 0; a < n; ++a) x[a] = adapted[a];
  return {x, graph(x) + adapted[n]};
}

CellMeasure::CellMeasure(AdaptedGrid grid) : grid_(std::move(grid)) {
  auto cells = static_cast<std::size_t>(grid_.cells());
  volume_.assign(cells, 0.0);
  for (int a = 0; a < grid_.axes(); ++a) faces_[static_cast<std::size_t>(a)].assign(cells, 0.0);
}

double CellMeasure::volume_total() const { return std::accumulate(volume_.begin(), volume_.end(), 0.0); }

double CellMeasure::face_total() const {
  double s = 0.0;
  for (int a = 0; a < grid_.axes(); ++a) {
    const auto& f = faces_[static_cast<std::size_t>(a)];
    s = std::accumulate(f.begin(), f.end(), s);
  }
  return s;
}

bool CellMeasure::has_volume_part() const {
  for (double w : volume_) {
    if (w != 0.0) return true;
  }
  return false;
}

void CellMeasure::validate() const {
  auto check = [](const std::vector<double>& ws, const char* what) {
    for (double w : ws) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw std::domain_error(std::string("CellMeasure: invalid ") + what);
    }
  };
  check(volume_, "volume weight");
  for (int a = 0; a < grid_.axes(); ++a) check(faces_[static_cast<std::size_t>(a)], "face weight");
}

CellMeasure CellMeasure::scaled(double factor) const {
  if (!(factor >= 0.0)) throw std::invalid_argument("CellMeasure::scaled: factor must be >= 0");
  CellMeasure out = *this;
  for (double& w : out.volume_) w *= factor;
  for (auto& f : out.faces_) {
    for (double& w : f) w *= factor;
  }
  return out;
}

}  // namespace ealab
