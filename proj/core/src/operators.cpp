#include "ealab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ealab/parallel.hpp"

namespace ealab {

double face_area_cartesian(const AdaptedGrid& grid, const LipschitzGraph& graph, std::int64_t cell, int axis) {
  const double flat = grid.face_area(axis);
  if (axis < grid.n) return flat;  // vertical faces: y = phi + h has unit Jacobian in h
  const Vec c = grid.center(cell);
  Vec x(grid.n);
  for (int a = 0; a < grid.n; ++a) x[a] = c[a];
  return flat * graph.area_element(x);
}

CellMeasure total_variation_piecewise(const AdaptedGrid& grid, const LipschitzGraph& graph,
                                      std::span<const double> cell_values) {
  if (static_cast<std::int64_t>(cell_values.size()) != grid.cells()) {
    throw std::invalid_argument("total_variation: one value per cell required");
  }
  CellMeasure mu(grid);
  const auto cells = grid.cells();
  for (int a = 0; a < grid.axes(); ++a) {
    const auto stride = grid.stride(a);
    const auto count = grid.count[static_cast<std::size_t>(a)];
    auto& faces = mu.face_weights(a);
    for (std::int64_t c = 0; c < cells; ++c) {
      if ((c / stride) % count == count - 1) continue;
      const double jump = std::abs(cell_values[static_cast<std::size_t>(c)] - cell_values[static_cast<std::size_t>(c + stride)]);
      if (jump > 0.0) faces[static_cast<std::size_t>(c)] = jump * face_area_cartesian(grid, graph, c, a);
    }
  }
  return mu;
}

CellMeasure total_variation_smooth(const AdaptedGrid& grid, const LipschitzGraph& graph,
                                   std::span<const double> cell_values) {
  if (static_cast<std::int64_t>(cell_values.size()) != grid.cells()) {
    throw std::invalid_argument("total_variation: one value per cell required");
  }
  CellMeasure mu(grid);
  const int n = grid.n;
  const double vol = grid.cell_volume();
  auto& weights = mu.volume_weights();
  for (std::int64_t c = 0; c < grid.cells(); ++c) {
    const auto idx = grid.unflatten(c);
    Vec d(n + 1);
    for (int a = 0; a <= n; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      const auto stride = grid.stride(a);
      const bool last = idx[ua] == grid.count[ua] - 1;
      if (grid.count[ua] < 2) continue;
      const auto lo = last ? c - stride : c;
      const auto hi = last ? c : c + stride;
      d[a] = (cell_values[static_cast<std::size_t>(hi)] - cell_values[static_cast<std::size_t>(lo)]) / grid.spacing[ua];
    }
    // Adapted derivatives D_a = u_a + u_y phi_a; undo the shear.
    const Vec centre = grid.center(c);
    Vec x(n);
    for (int a = 0; a < n; ++a) x[a] = centre[a];
    const Vec gphi = graph.gradient(x);
    Vec g(n + 1);
    for (int a = 0; a < n; ++a) g[a] = d[a] - d[n] * gphi[a];
    g[n] = d[n];
    weights[static_cast<std::size_t>(c)] = g.norm() * vol;
  }
  return mu;
}

namespace {

struct ConeLattice {
  int n = 1;
  double dx = 1.0;
  std::array<std::int64_t, kMaxAmbientDim> lo{};
  std::array<std::int64_t, kMaxAmbientDim> count{};
};

// Lattice cells (multiples of 2^-depth) covering the bounding box of the
// truncated cone in adapted coordinates.
ConeLattice cone_lattice(const LipschitzGraph& graph, const Vec& vertex_x, const ConeSpec& cone, int depth) {
  cone.validate_for(graph);
  if (!std::isfinite(cone.upper)) throw std::invalid_argument("cone quadrature needs a finite upper truncation");
  if (depth < 1 || depth > 14) throw std::invalid_argument("quadrature depth must be in [1, 14]");
  ConeLattice lat;
  lat.n = graph.dim();
  lat.dx = std::ldexp(1.0, -depth);
  const double reach = cone.alpha * cone.upper / (1.0 - cone.alpha * graph.lipschitz());
  for (int a = 0; a < lat.n; ++a) {
    const auto lo = static_cast<std::int64_t>(std::floor((vertex_x[a] - reach) / lat.dx));
    const auto hi = static_cast<std::int64_t>(std::ceil((vertex_x[a] + reach) / lat.dx));
    lat.lo[static_cast<std::size_t>(a)] = lo;
    lat.count[static_cast<std::size_t>(a)] = hi - lo;
  }
  const auto hlo = static_cast<std::int64_t>(std::floor(cone.lower / lat.dx));
  const auto hhi = static_cast<std::int64_t>(std::ceil(cone.upper / lat.dx));
  lat.lo[static_cast<std::size_t>(lat.n)] = hlo;
  lat.count[static_cast<std::size_t>(lat.n)] = hhi - hlo;
  return lat;
}

struct ConeIndicator {
  const LipschitzGraph& graph;
  Vec vertex;
  double phi_v;
  ConeSpec cone;

  bool operator()(const Vec& adapted) const {
    const int n = vertex.size();
    const double h = adapted[n];
    if (!(h > cone.lower && h < cone.upper)) return false;
    Vec z(n);
    for (int a = 0; a < n; ++a) z[a] = adapted[a];
    return distance(z, vertex) < cone.alpha * (graph(z) + h - phi_v);
  }
};

// Calls body(lower corner, row index) for every lattice cell; rows split on
// the first axis run in parallel.
template <typename Body>
void sweep_rows(const ConeLattice& lat, Body&& body) {
  const int axes = lat.n + 1;
  std::int64_t per_row = 1;
  for (int a = 1; a < axes; ++a) per_row *= lat.count[static_cast<std::size_t>(a)];
  parallel_for(static_cast<std::size_t>(lat.count[0]), [&](std::size_t row) {
    for (std::int64_t k = 0; k < per_row; ++k) {
      Vec corner(axes);
      corner[0] = static_cast<double>(lat.lo[0] + static_cast<std::int64_t>(row)) * lat.dx;
      std::int64_t rest = k;
      for (int a = axes - 1; a >= 1; --a) {
        const auto ua = static_cast<std::size_t>(a);
        corner[a] = static_cast<double>(lat.lo[ua] + rest % lat.count[ua]) * lat.dx;
        rest /= lat.count[ua];
      }
      body(corner, row);
    }
  });
}

struct AreaPass {
  double total = 0.0;
  double bottom = 0.0;  // contribution of h < bottom_height
};

AreaPass area_pass(const ScalarField& field, const LipschitzGraph& graph, const Vec& vertex_x, const ConeSpec& cone,
                   int depth, int supersample, double bottom_height) {
  const ConeLattice lat = cone_lattice(graph, vertex_x, cone, depth);
  const ConeIndicator inside{graph, vertex_x, graph(vertex_x), cone};
  const int n = lat.n;
  const int axes = n + 1;
  const double vol = std::pow(lat.dx, axes);
  const int corners = 1 << axes;
  int subs = 1;
  for (int a = 0; a < axes; ++a) subs *= supersample;
  const double sub_vol = vol / subs;

  auto integrand = [&](const Vec& adapted) {
    const DomainPoint p = to_cartesian(graph, adapted);
    const double depth_above = p.y - inside.phi_v;
    const double w = n == 1 ? 1.0 : std::pow(depth_above, 1 - n);
    return field.grad(p).norm_squared() * w;
  };

  std::vector<double> rows_total(static_cast<std::size_t>(lat.count[0]), 0.0);
  std::vector<double> rows_bottom(rows_total.size(), 0.0);
  sweep_rows(lat, [&](const Vec& corner, std::size_t row) {
    Vec mid = corner;
    for (int a = 0; a < axes; ++a) mid[a] += 0.5 * lat.dx;
    int hits = inside(mid) ? 1 : 0;
    for (int m = 0; m < corners; ++m) {
      Vec q = corner;
      for (int a = 0; a < axes; ++a) {
        if (m & (1 << a)) q[a] += lat.dx;
      }
      hits += inside(q) ? 1 : 0;
    }
    double contrib = 0.0;
    if (hits == corners + 1) {
      contrib = integrand(mid) * vol;
    } else if (hits > 0) {
      for (int s = 0; s < subs; ++s) {
        Vec q = corner;
        int rest = s;
        for (int a = 0; a < axes; ++a) {
          q[a] += ((rest % supersample) + 0.5) * lat.dx / supersample;
          rest /= supersample;
        }
        if (inside(q)) contrib += integrand(q) * sub_vol;
      }
    }
    rows_total[row] += contrib;
    if (corner[n] < bottom_height) rows_bottom[row] += contrib;
  });
  AreaPass out;
  for (std::size_t i = 0; i < rows_total.size(); ++i) {
    out.total += rows_total[i];
    out.bottom += rows_bottom[i];
  }
  return out;
}

}  // namespace

std::vector<DomainPoint> cone_samples(const LipschitzGraph& graph, const Vec& vertex_x, const ConeSpec& cone,
                                      int depth) {
  const ConeLattice lat = cone_lattice(graph, vertex_x, cone, depth);
  const ConeIndicator inside{graph, vertex_x, graph(vertex_x), cone};
  std::vector<std::vector<DomainPoint>> rows(static_cast<std::size_t>(lat.count[0]));
  sweep_rows(lat, [&](const Vec& corner, std::size_t row) {
    Vec mid = corner;
    for (int a = 0; a < mid.size(); ++a) mid[a] += 0.5 * lat.dx;
    if (inside(mid)) rows[row].push_back(to_cartesian(graph, mid));
  });
  std::vector<DomainPoint> out;
  for (auto& r : rows) out.insert(out.end(), r.begin(), r.end());
  return out;
}

AreaFunctionResult area_function(const ScalarField& field, const LipschitzGraph& graph, const Vec& vertex_x,
                                 const ConeSpec& cone, const QuadratureOptions& opts) {
  if (opts.supersample < 1) throw std::invalid_argument("supersample must be >= 1");
  const double bottom = std::ldexp(4.0, -(opts.depth - 1));
  const AreaPass fine = area_pass(field, graph, vertex_x, cone, opts.depth, opts.supersample, bottom);
  const AreaPass coarse = area_pass(field, graph, vertex_x, cone, opts.depth - 1, opts.supersample, bottom);
  AreaFunctionResult out;
  out.value = std::sqrt(fine.total);
  out.coarse_value = std::sqrt(coarse.total);
  out.error_estimate = std::abs(out.value - out.coarse_value);
  // Mass concentrating at the vertex and still growing under refinement.
  out.divergence_flag = !std::isfinite(fine.total) ||
                        (fine.bottom > 0.1 * fine.total && fine.bottom > 1.5 * coarse.bottom);
  return out;
}

NontangentialResult nontangential_max(const ScalarField& field, const LipschitzGraph& graph, const Vec& vertex_x,
                                      const ConeSpec& cone, int depth) {
  NontangentialResult out;
  auto sup_over = [&](int d, bool keep_witness) {
    double best = 0.0;
    for (const auto& p : cone_samples(graph, vertex_x, cone, d)) {
      const double v = std::abs(field.u(p));
      if (v > best || (keep_witness && !out.witness)) {
        best = std::max(best, v);
        if (keep_witness) out.witness = p;
      }
    }
    return best;
  };
  out.value = sup_over(depth, true);
  out.coarse_value = depth > 1 ? sup_over(depth - 1, false) : out.value;
  return out;
}

FatouResult fatou_average(const ScalarField& field, const LipschitzGraph& graph, const CountingParams& params,
                          const RootCube& window, std::span<const double> radii, const FatouOptions& opts) {
  if (!field.sup_norm_hint) throw std::domain_error("fatou_average: field has no sup_norm_hint");
  if (*field.sup_norm_hint > 1.0) throw std::domain_error("fatou_average: requires |u| <= 1");
  params.validate();
  if (opts.boundary_samples < 1 || opts.omega_samples < 1) throw std::invalid_argument("fatou_average: bad sampling");
  const int n = graph.dim();

  auto lattice = [&](int per_axis, bool nodes) {
    std::vector<Vec> pts;
    std::int64_t total = 1;
    for (int a = 0; a < n; ++a) total *= per_axis;
    for (std::int64_t k = 0; k < total; ++k) {
      Vec x(n);
      std::int64_t rest = k;
      for (int a = n - 1; a >= 0; --a) {
        const auto i = static_cast<double>(rest % per_axis);
        rest /= per_axis;
        const double frac = nodes ? (per_axis > 1 ? i / (per_axis - 1) : 0.5) : (i + 0.5) / per_axis;
        x[a] = window.origin[a] + frac * window.side;
      }
      pts.push_back(x);
    }
    return pts;
  };
  const auto zs = lattice(opts.boundary_samples, false);
  const auto omegas = lattice(opts.omega_samples, true);
  const double cell = std::pow(window.side / opts.boundary_samples, n);

  std::vector<double> weight(zs.size());
  for (std::size_t i = 0; i < zs.size(); ++i) weight[i] = cell * graph.area_element(zs[i]);

  FatouResult out;
  for (double r : radii) {
    if (!(r > 0.0)) throw std::invalid_argument("fatou_average: radii must be > 0");
    CountingParams pr = params;
    pr.r = r;
    std::vector<double> counts(zs.size());
    parallel_for(zs.size(), [&](std::size_t i) {
      counts[i] = static_cast<double>(counting_function(field, graph, zs[i], pr, opts.depth).count);
    });
    for (const auto& w : omegas) {
      const DomainPoint W{w, graph(w)};
      double acc = 0.0;
      for (std::size_t i = 0; i < zs.size(); ++i) {
        if (counts[i] == 0.0) continue;
        if (distance(DomainPoint{zs[i], graph(zs[i])}, W) < r) acc += counts[i] * weight[i];
      }
      const double avg = acc / std::pow(r, n);
      out.rows.push_back({w, r, avg});
      if (avg > out.sup || out.rows.size() == 1) {
        out.sup = std::max(out.sup, avg);
        out.witness_omega = w;
        out.witness_r = r;
      }
    }
  }
  return out;
}

}  // namespace ealab
