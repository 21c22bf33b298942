#include "ealab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace ealab {

namespace {

Vec central_difference_gradient(const LipschitzGraph::Eval& phi, const Vec& x) {
  constexpr double kStep = 1e-6;
  Vec g(x.size());
  for (int a = 0; a < x.size(); ++a) {
    Vec plus = x;
    Vec minus = x;
    plus[a] += kStep;
    minus[a] -= kStep;
    g[a] = (phi(plus) - phi(minus)) / (2.0 * kStep);
  }
  return g;
}

// Tensor-grid multilinear interpolant shared by from_samples.
struct SampledSurface {
  std::vector<std::vector<double>> axes;
  std::vector<double> values;
  std::vector<std::size_t> strides;

  double at(const std::vector<std::size_t>& idx) const {
    std::size_t flat = 0;
    for (std::size_t a = 0; a < idx.size(); ++a) flat += idx[a] * strides[a];
    return values[flat];
  }

  double operator()(const Vec& x) const {
    const std::size_t n = axes.size();
    std::vector<std::size_t> base(n);
    std::vector<double> frac(n);
    for (std::size_t a = 0; a < n; ++a) {
      const auto& ax = axes[a];
      double xa = std::clamp(x[static_cast<int>(a)], ax.front(), ax.back());
      auto it = std::upper_bound(ax.begin(), ax.end(), xa);
      std::size_t hi = static_cast<std::size_t>(std::distance(ax.begin(), it));
      hi = std::clamp<std::size_t>(hi, 1, ax.size() - 1);
      base[a] = hi - 1;
      frac[a] = (xa - ax[hi - 1]) / (ax[hi] - ax[hi - 1]);
    }
    double result = 0.0;
    std::vector<std::size_t> idx(n);
    for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
      double w = 1.0;
      for (std::size_t a = 0; a < n; ++a) {
        bool up = (corner >> a) & 1u;
        idx[a] = base[a] + (up ? 1 : 0);
        w *= up ? frac[a] : 1.0 - frac[a];
      }
      if (w != 0.0) result += w * at(idx);
    }
    return result;
  }

  // Largest gradient norm of the interpolant; attained at cell corners since
  // each partial derivative is multilinear in the remaining variables.
  double max_slope() const {
    const std::size_t n = axes.size();
    double best = 0.0;
    std::vector<std::size_t> cell(n, 0);
    std::vector<std::size_t> idx(n);
    while (true) {
      for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
        double sq = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
          for (std::size_t b = 0; b < n; ++b) idx[b] = cell[b] + ((corner >> b) & 1u);
          idx[a] = cell[a];
          double lo = at(idx);
          idx[a] = cell[a] + 1;
          double hi = at(idx);
          double d = (hi - lo) / (axes[a][cell[a] + 1] - axes[a][cell[a]]);
          sq += d * d;
        }
        best = std::max(best, std::sqrt(sq));
      }
      std::size_t a = 0;
      while (a < n) {
        if (++cell[a] + 1 < axes[a].size()) break;
        cell[a] = 0;
        ++a;
      }
      if (a == n) break;
    }
    return best;
  }
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

LipschitzGraph::LipschitzGraph(int n, Eval phi, double lipschitz_L, GradEval grad, std::string kind)
    : n_(n), phi_(std::move(phi)), grad_(std::move(grad)), L_(lipschitz_L), kind_(std::move(kind)) {
  if (n < 1 || n > kMaxBoundaryDim) throw std::invalid_argument("LipschitzGraph: n must be in [1, 3]");
  if (!(lipschitz_L >= 0.0) || !std::isfinite(lipschitz_L)) {
    throw std::invalid_argument("LipschitzGraph: Lipschitz constant must be finite and >= 0");
  }
  if (!phi_) throw std::invalid_argument("LipschitzGraph: missing evaluator");
}

LipschitzGraph LipschitzGraph::flat(int n) {
  return LipschitzGraph(
      n, [](const Vec&) { return 0.0; }, 0.0, [n](const Vec&) { return Vec(n, 0.0); }, "flat");
}

LipschitzGraph LipschitzGraph::linear(const Vec& slope, double offset) {
  return LipschitzGraph(
      slope.size(), [slope, offset](const Vec& x) { return dot(slope, x) + offset; }, slope.norm(),
      [slope](const Vec&) { return slope; }, "linear");
}

LipschitzGraph LipschitzGraph::abs_cone(int n) {
  return LipschitzGraph(
      n, [](const Vec& x) { return x.norm(); }, 1.0,
      [n](const Vec& x) {
        double r = x.norm();
        return r == 0.0 ? Vec(n, 0.0) : x * (1.0 / r);
      },
      "abs");
}

LipschitzGraph LipschitzGraph::from_samples(std::vector<std::vector<double>> axes, std::vector<double> values) {
  const std::size_t n = axes.size();
  if (n < 1 || n > static_cast<std::size_t>(kMaxBoundaryDim)) {
    throw std::invalid_argument("from_samples: boundary dimension must be in [1, 3]");
  }
  std::size_t total = 1;
  for (const auto& ax : axes) {
    if (ax.size() < 2) throw std::invalid_argument("from_samples: need at least two samples per axis");
    for (std::size_t i = 1; i < ax.size(); ++i) {
      if (!(ax[i] > ax[i - 1])) throw std::invalid_argument("from_samples: axis coordinates must increase");
    }
    total *= ax.size();
  }
  if (values.size() != total) throw std::invalid_argument("from_samples: value count does not match grid");
  auto surface = std::make_shared<SampledSurface>();
  surface->axes = std::move(axes);
  surface->values = std::move(values);
  surface->strides.assign(n, 1);
  for (std::size_t a = n - 1; a > 0; --a) surface->strides[a - 1] = surface->strides[a] * surface->axes[a].size();
  double L = surface->max_slope();
  return LipschitzGraph(
      static_cast<int>(n), [surface](const Vec& x) { return (*surface)(x); }, L, {}, "samples");
}

LipschitzGraph LipschitzGraph::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open boundary sample file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": missing header row");
  auto header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "phi") {
    throw std::runtime_error(path + ": header must be x_1,...,x_n,phi");
  }
  const std::size_t n = header.size() - 1;
  for (std::size_t a = 0; a < n; ++a) {
    if (header[a] != "x_" + std::to_string(a + 1)) {
      throw std::runtime_error(path + ": header column " + std::to_string(a + 1) + " must be x_" +
                               std::to_string(a + 1));
    }
  }
  std::vector<std::map<double, std::size_t>> coords(n);
  std::vector<std::pair<std::vector<double>, double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != n + 1) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(n + 1) +
                               " columns");
    }
    std::vector<double> x(n);
    double phi = 0.0;
    try {
      for (std::size_t a = 0; a < n; ++a) x[a] = std::stod(cells[a]);
      phi = std::stod(cells[n]);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": non-numeric value");
    }
    for (std::size_t a = 0; a < n; ++a) coords[a].emplace(x[a], 0);
    rows.emplace_back(std::move(x), phi);
  }
  std::vector<std::vector<double>> axes(n);
  std::size_t total = 1;
  for (std::size_t a = 0; a < n; ++a) {
    std::size_t k = 0;
    for (auto& [value, index] : coords[a]) {
      index = k++;
      axes[a].push_back(value);
    }
    total *= axes[a].size();
  }
  if (rows.size() != total) throw std::runtime_error(path + ": samples do not form a complete tensor grid");
  std::vector<double> values(total, std::numeric_limits<double>::quiet_NaN());
  for (const auto& [x, phi] : rows) {
    std::size_t flat = 0;
    for (std::size_t a = 0; a < n; ++a) flat = flat * axes[a].size() + coords[a].at(x[a]);
    values[flat] = phi;
  }
  for (double v : values) {
    if (std::isnan(v)) throw std::runtime_error(path + ": duplicate grid samples");
  }
  return from_samples(std::move(axes), std::move(values));
}

Vec LipschitzGraph::gradient(const Vec& x) const {
  if (grad_) return grad_(x);
  return central_difference_gradient(phi_, x);
}

double LipschitzGraph::area_element(const Vec& x) const {
  return std::sqrt(1.0 + gradient(x).norm_squared());
}

Vec DomainPoint::ambient() const {
  Vec z(x.size() + 1);
  for (int a = 0; a < x.size(); ++a) z[a] = x[a];
  z[x.size()] = y;
  return z;
}

DomainPoint DomainPoint::from_ambient(const Vec& z) {
  Vec x(z.size() - 1);
  for (int a = 0; a < x.size(); ++a) x[a] = z[a];
  return {x, z[z.size() - 1]};
}

double distance(const DomainPoint& a, const DomainPoint& b) {
  double dy = a.y - b.y;
  return std::sqrt((a.x - b.x).norm_squared() + dy * dy);
}

void ConeSpec::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("cone aperture alpha must be positive");
  if (!(lower >= 0.0) || !(upper >= lower)) throw std::invalid_argument("cone truncation needs 0 <= s <= t");
}

void ConeSpec::validate_for(const LipschitzGraph& graph) const {
  validate();
  if (graph.lipschitz() > 0.0 && !(alpha * graph.lipschitz() < 1.0)) {
    throw std::invalid_argument("cone aperture alpha must satisfy alpha < 1/L");
  }
}

RootCube RootCube::centered(const Vec& center, double side) {
  Vec origin = center;
  for (int a = 0; a < origin.size(); ++a) origin[a] -= side / 2.0;
  return {origin, side};
}

double CurvedCube::side() const { return std::ldexp(root.side, -m); }

Vec CurvedCube::lower_corner() const {
  Vec lo = root.origin;
  double l = side();
  for (int a = 0; a < lo.size(); ++a) lo[a] += static_cast<double>(j[static_cast<std::size_t>(a)]) * l;
  return lo;
}

Vec CurvedCube::center() const {
  Vec c = lower_corner();
  double half = side() / 2.0;
  for (int a = 0; a < c.size(); ++a) c[a] += half;
  return c;
}

bool CurvedCube::contains_x(const Vec& x) const {
  Vec lo = lower_corner();
  double l = side();
  for (int a = 0; a < lo.size(); ++a) {
    if (x[a] < lo[a] || x[a] > lo[a] + l) return false;
  }
  return true;
}

CurvedCube CurvedCube::parent() const {
  if (m == 0) throw std::logic_error("root cube has no parent");
  CurvedCube p = *this;
  p.m = m - 1;
  for (auto& ja : p.j) ja >>= 1;
  return p;
}

bool CurvedCube::operator==(const CurvedCube& other) const {
  return m == other.m && j == other.j && root.origin == other.root.origin && root.side == other.root.side;
}

bool ShadowBall::contains_boundary_point(const LipschitzGraph& graph, const Vec& omega) const {
  DomainPoint w{omega, graph(omega)};
  return distance(w, center) < radius;
}

bool AdaptedBox::contains_adapted(const Vec& x, double h) const {
  for (int a = 0; a < lo.size(); ++a) {
    if (x[a] < lo[a] || x[a] > hi[a]) return false;
  }
  return h >= h_lo && h <= h_hi;
}

bool AdaptedBox::contains(const LipschitzGraph& graph, const DomainPoint& p) const {
  return contains_adapted(p.x, p.height(graph));
}

double AdaptedBox::volume() const {
  double v = h_hi - h_lo;
  for (int a = 0; a < lo.size(); ++a) v *= hi[a] - lo[a];
  return v;
}

bool cone_membership(const LipschitzGraph& graph, const Vec& vertex_x, const ConeSpec& cone,
                     const DomainPoint& p) {
  if (!(cone.alpha > 0.0)) throw std::invalid_argument("cone aperture alpha must be positive");
  double lateral = (p.x - vertex_x).norm();
  if (!(lateral < cone.alpha * (p.y - graph(vertex_x)))) return false;
  double h = p.height(graph);
  return cone.lower < h && h < cone.upper;
}

bool cube_membership(const LipschitzGraph& graph, const CurvedCube& cube, const DomainPoint& p) {
  if (!cube.contains_x(p.x)) return false;
  double h = p.height(graph);
  return h >= 0.0 && h <= cube.side();
}

CubeCenters centers(const LipschitzGraph& graph, const CurvedCube& cube) {
  Vec xq = cube.center();
  double l = cube.side();
  double base = graph(xq);
  return {{xq, base + l / 2.0}, {xq, base + 1.5 * l}, {xq, base + l}};
}

AdaptedBox curved_box(const CurvedCube& cube) {
  Vec lo = cube.lower_corner();
  Vec hi = lo;
  double l = cube.side();
  for (int a = 0; a < hi.size(); ++a) hi[a] += l;
  return {lo, hi, 0.0, l};
}

AdaptedBox translated_box(const CurvedCube& cube) {
  AdaptedBox box = curved_box(cube);
  double l = cube.side();
  box.h_lo = l / 2.0;
  box.h_hi = cube.m == 0 ? l : 1.5 * l;
  return box;
}

namespace {

struct NearestBoundary {
  Vec x;
  double distance;
};

NearestBoundary nearest_boundary_point(const LipschitzGraph& graph, const DomainPoint& z, int samples_per_axis) {
  const double h = z.height(graph);
  if (!(h > 0.0)) throw std::invalid_argument("boundary distance: point is not in the domain");
  if (graph.is_flat()) return {z.x, h};
  const int n = graph.dim();
  auto dist_to = [&](const Vec& x) {
    double dy = z.y - graph(x);
    return std::sqrt((x - z.x).norm_squared() + dy * dy);
  };
  // Any minimiser lies within |x - z_x| <= h because the point straight below is at distance h.
  const int per_axis = std::max(8, samples_per_axis / n);
  Vec best_x = z.x;
  double best = h;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  const double step = 2.0 * h / per_axis;
  while (true) {
    Vec x(n);
    for (int a = 0; a < n; ++a) x[a] = z.x[a] - h + (idx[static_cast<std::size_t>(a)] + 0.5) * step;
    double d = dist_to(x);
    if (d < best) {
      best = d;
      best_x = x;
    }
    int a = 0;
    while (a < n) {
      if (++idx[static_cast<std::size_t>(a)] < per_axis) break;
      idx[static_cast<std::size_t>(a)] = 0;
      ++a;
    }
    if (a == n) break;
  }
  // Compass search from the best grid sample.
  double s = step;
  while (s > 1e-13 * std::max(1.0, h)) {
    bool moved = false;
    for (int a = 0; a < n && !moved; ++a) {
      for (double sign : {1.0, -1.0}) {
        Vec x = best_x;
        x[a] += sign * s;
        double d = dist_to(x);
        if (d < best) {
          best = d;
          best_x = x;
          moved = true;
          break;
        }
      }
    }
    if (!moved) s /= 2.0;
  }
  return {best_x, best};
}

}  // namespace

double boundary_distance(const LipschitzGraph& graph, const DomainPoint& z, int samples_per_axis) {
  return nearest_boundary_point(graph, z, samples_per_axis).distance;
}

ShadowBall shadow(const LipschitzGraph& graph, const DomainPoint& z, double alpha, int samples_per_axis) {
  if (!z.in_domain(graph)) throw std::invalid_argument("shadow: point is not in the domain");
  if (!(alpha > 0.0)) throw std::invalid_argument("shadow: alpha must be positive");
  NearestBoundary nb = nearest_boundary_point(graph, z, samples_per_axis);
  return {z, nb.distance, (1.0 + alpha) * nb.distance, {nb.x, graph(nb.x)}};
}

BallBoxReport ball_box_check(const LipschitzGraph& graph, const CurvedCube& cube, int samples_per_axis) {
  const int n = graph.dim();
  const double l = cube.side();
  const double L = graph.lipschitz();
  BallBoxReport report;
  report.outer_constant = std::sqrt(n + 1 + L * L);
  const DomainPoint c = centers(graph, cube).center;
  const int dims = n + 1;
  const int k = std::max(4, samples_per_axis);

  auto sweep = [&](auto&& visit) {
    std::vector<int> idx(static_cast<std::size_t>(dims), 0);
    while (true) {
      visit(idx);
      int a = 0;
      while (a < dims) {
        if (++idx[static_cast<std::size_t>(a)] <= k) break;
        idx[static_cast<std::size_t>(a)] = 0;
        ++a;
      }
      if (a == dims) break;
    }
  };

  auto check_inner = [&](double radius, bool& ok, std::optional<DomainPoint>* witness) {
    Vec center = c.ambient();
    sweep([&](const std::vector<int>& idx) {
      Vec z(dims);
      for (int a = 0; a < dims; ++a) z[a] = center[a] - radius + 2.0 * radius * idx[static_cast<std::size_t>(a)] / k;
      // stay strictly inside the open ball
      if ((z - center).norm() >= radius * (1.0 - 1e-12)) return;
      DomainPoint p = DomainPoint::from_ambient(z);
      if (!cube_membership(graph, cube, p)) {
        if (ok && witness) *witness = p;
        ok = false;
      }
    });
  };
  check_inner(l, report.inner_ok, &report.inner_witness);
  check_inner(l / (2.0 * (1.0 + L)), report.inner_ok_corrected, nullptr);

  const Vec lo = cube.lower_corner();
  sweep([&](const std::vector<int>& idx) {
    Vec x(n);
    for (int a = 0; a < n; ++a) x[a] = lo[a] + l * idx[static_cast<std::size_t>(a)] / k;
    double h = l * idx[static_cast<std::size_t>(n)] / k;
    DomainPoint p = DomainPoint::from_adapted(graph, x, h);
    double r = distance(p, c) / l;
    report.max_outer_distance = std::max(report.max_outer_distance, r);
    if (!(r < report.outer_constant)) {
      if (report.outer_ok) report.outer_witness = p;
      report.outer_ok = false;
    }
  });
  return report;
}

std::vector<CurvedCube> dyadic_children(const CurvedCube& cube) {
  const int n = cube.dim();
  std::vector<CurvedCube> out;
  out.reserve(std::size_t{1} << n);
  for (unsigned corner = 0; corner < (1u << n); ++corner) {
    CurvedCube child = cube;
    child.m = cube.m + 1;
    for (int a = 0; a < n; ++a) {
      child.j[static_cast<std::size_t>(a)] = 2 * cube.j[static_cast<std::size_t>(a)] + ((corner >> a) & 1u);
    }
    out.push_back(child);
  }
  return out;
}

}  // namespace ealab
