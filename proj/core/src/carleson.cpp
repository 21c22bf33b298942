#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ealab/operators.hpp"
#include "ealab/parallel.hpp"

namespace ealab {

namespace {

constexpr int kSuper = 4;

// Summed-area table over per-cell masses (volume plus the faces owned by the
// cell), padded by one slot per axis.
class MassTable {
 public:
  explicit MassTable(const CellMeasure& mu) : grid_(mu.grid()) {
    const int axes = grid_.axes();
    padded_stride_.fill(0);
    std::int64_t s = 1;
    for (int a = axes - 1; a >= 0; --a) {
      padded_stride_[static_cast<std::size_t>(a)] = s;
      s *= grid_.count[static_cast<std::size_t>(a)] + 1;
    }
    table_.assign(static_cast<std::size_t>(s), 0.0);
    for (std::int64_t c = 0; c < grid_.cells(); ++c) {
      double m = mu.volume_weights()[static_cast<std::size_t>(c)];
      for (int a = 0; a < axes; ++a) m += mu.face_weights(a)[static_cast<std::size_t>(c)];
      const auto idx = grid_.unflatten(c);
      std::int64_t p = 0;
      for (int a = 0; a < axes; ++a) p += (idx[static_cast<std::size_t>(a)] + 1) * padded_stride_[static_cast<std::size_t>(a)];
      table_[static_cast<std::size_t>(p)] = m;
    }
    // Prefix sums along each axis in turn.
    for (int a = 0; a < axes; ++a) {
      const auto st = padded_stride_[static_cast<std::size_t>(a)];
      const auto len = grid_.count[static_cast<std::size_t>(a)] + 1;
      for (std::int64_t p = 0; p < static_cast<std::int64_t>(table_.size()); ++p) {
        if ((p / st) % len != 0) table_[static_cast<std::size_t>(p)] += table_[static_cast<std::size_t>(p - st)];
      }
    }
  }

  // Mass of cells with lo <= idx < hi.
  double sum(const CellIndex& lo, const CellIndex& hi) const {
    const int axes = grid_.axes();
    double total = 0.0;
    for (int mask = 0; mask < (1 << axes); ++mask) {
      std::int64_t p = 0;
      int sign = 1;
      for (int a = 0; a < axes; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        if (mask & (1 << a)) {
          p += lo[ua] * padded_stride_[ua];
          sign = -sign;
        } else {
          p += hi[ua] * padded_stride_[ua];
        }
      }
      total += sign * table_[static_cast<std::size_t>(p)];
    }
    return total;
  }

 private:
  AdaptedGrid grid_;
  std::array<std::int64_t, kMaxAmbientDim> padded_stride_{};
  std::vector<double> table_;
};

struct BallQuery {
  const CellMeasure& mu;
  const LipschitzGraph& graph;
  const MassTable& table;
  Vec center;  // boundary point x
  double phi_c;
  double radius;

  // Squared Cartesian distance bounds from (x, phi(x)) to the cells lo <= idx < hi.
  std::pair<double, double> distance_bounds(const CellIndex& lo, const CellIndex& hi) const {
    const AdaptedGrid& g = mu.grid();
    const int n = g.n;
    double near2 = 0.0, far2 = 0.0, rho2 = 0.0;
    Vec mid(n);
    for (int a = 0; a < n; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      const double l = g.origin[a] + static_cast<double>(lo[ua]) * g.spacing[ua];
      const double h = g.origin[a] + static_cast<double>(hi[ua]) * g.spacing[ua];
      mid[a] = 0.5 * (l + h);
      rho2 += 0.25 * (h - l) * (h - l);
      const double dl = l - center[a], dh = h - center[a];
      far2 += std::max(dl * dl, dh * dh);
      if (dl > 0.0) near2 += dl * dl;
      else if (dh < 0.0) near2 += dh * dh;
    }
    const auto un = static_cast<std::size_t>(n);
    const double spread = graph.lipschitz() * std::sqrt(rho2);
    const double base = graph(mid) - phi_c;
    const double ylo = base - spread + g.origin[n] + static_cast<double>(lo[un]) * g.spacing[un];
    const double yhi = base + spread + g.origin[n] + static_cast<double>(hi[un]) * g.spacing[un];
    far2 += std::max(ylo * ylo, yhi * yhi);
    if (ylo > 0.0) near2 += ylo * ylo;
    else if (yhi < 0.0) near2 += yhi * yhi;
    return {near2, far2};
  }

  bool inside(const Vec& adapted) const {
    const DomainPoint p = to_cartesian(graph, adapted);
    Vec d = p.ambient();
    for (int a = 0; a < center.size(); ++a) d[a] -= center[a];
    d[center.size()] -= phi_c;
    return d.norm_squared() < radius * radius;
  }

  double leaf(std::int64_t cell) const {
    const AdaptedGrid& g = mu.grid();
    const int axes = g.axes();
    const Vec c = g.center(cell);
    double total = 0.0;
    const double vw = mu.volume_weights()[static_cast<std::size_t>(cell)];
    if (vw > 0.0) {
      int subs = 1;
      for (int a = 0; a < axes; ++a) subs *= kSuper;
      int hits = 0;
      for (int s = 0; s < subs; ++s) {
        Vec q = c;
        int rest = s;
        for (int a = 0; a < axes; ++a) {
          const auto ua = static_cast<std::size_t>(a);
          q[a] += ((rest % kSuper + 0.5) / kSuper - 0.5) * g.spacing[ua];
          rest /= kSuper;
        }
        hits += inside(q) ? 1 : 0;
      }
      total += vw * hits / subs;
    }
    for (int a = 0; a < axes; ++a) {
      const double fw = mu.face_weights(a)[static_cast<std::size_t>(cell)];
      if (fw <= 0.0) continue;
      Vec q = c;
      q[a] += 0.5 * g.spacing[static_cast<std::size_t>(a)];
      if (inside(q)) total += fw;
    }
    return total;
  }

  double recurse(CellIndex lo, CellIndex hi) const {
    const double mass = table.sum(lo, hi);
    if (mass <= 0.0) return 0.0;
    const auto [near2, far2] = distance_bounds(lo, hi);
    const double r2 = radius * radius;
    if (near2 >= r2) return 0.0;
    if (far2 < r2) return mass;
    const AdaptedGrid& g = mu.grid();
    int split = -1;
    std::int64_t widest = 1;
    for (int a = 0; a < g.axes(); ++a) {
      const auto w = hi[static_cast<std::size_t>(a)] - lo[static_cast<std::size_t>(a)];
      if (w > widest) {
        widest = w;
        split = a;
      }
    }
    if (split < 0) return leaf(g.flatten(lo));
    const auto us = static_cast<std::size_t>(split);
    const auto midp = lo[us] + (hi[us] - lo[us]) / 2;
    CellIndex hi_left = hi, lo_right = lo;
    hi_left[us] = midp;
    lo_right[us] = midp;
    return recurse(lo, hi_left) + recurse(lo_right, hi);
  }
};

}  // namespace

double measure_in_ball(const CellMeasure& measure, const LipschitzGraph& graph, const Vec& center, double radius) {
  const MassTable table(measure);
  const BallQuery q{measure, graph, table, center, graph(center), radius};
  CellIndex lo{}, hi{};
  for (int a = 0; a < measure.grid().axes(); ++a) hi[static_cast<std::size_t>(a)] = measure.grid().count[static_cast<std::size_t>(a)];
  return q.recurse(lo, hi);
}

CarlesonResult carleson_constant(const CellMeasure& measure, const LipschitzGraph& graph,
                                 std::span<const double> radii, std::span<const Vec> boundary_samples) {
  for (double r : radii) {
    if (!(r > 0.0)) throw std::invalid_argument("carleson_constant: radii must be > 0");
  }
  measure.validate();
  CarlesonResult out;
  if (boundary_samples.empty() || radii.empty()) return out;
  out.witness_x = boundary_samples.front();
  out.witness_r = radii.front();
  if (measure.total() == 0.0) return out;

  const MassTable table(measure);
  const int n = graph.dim();
  CellIndex full{};
  for (int a = 0; a < measure.grid().axes(); ++a) full[static_cast<std::size_t>(a)] = measure.grid().count[static_cast<std::size_t>(a)];

  const std::size_t nr = radii.size();
  std::vector<double> masses(boundary_samples.size() * nr, 0.0);
  parallel_for(boundary_samples.size(), [&](std::size_t i) {
    const Vec& x = boundary_samples[i];
    for (std::size_t k = 0; k < nr; ++k) {
      const BallQuery q{measure, graph, table, x, graph(x), radii[k]};
      masses[i * nr + k] = q.recurse(CellIndex{}, full);
    }
  });
  for (std::size_t i = 0; i < boundary_samples.size(); ++i) {
    for (std::size_t k = 0; k < nr; ++k) {
      const double ratio = masses[i * nr + k] / std::pow(radii[k], n);
      if (ratio > out.constant) {
        out.constant = ratio;
        out.witness_x = boundary_samples[i];
        out.witness_r = radii[k];
        out.witness_mass = masses[i * nr + k];
      }
    }
  }
  return out;
}

std::vector<double> dyadic_radii(double scale, int levels) {
  if (!(scale > 0.0) || levels < 1) throw std::invalid_argument("dyadic_radii: scale > 0 and levels >= 1 required");
  std::vector<double> r;
  for (int i = 0; i < levels; ++i) r.push_back(std::ldexp(scale, -i));
  return r;
}

std::vector<Vec> boundary_node_samples(const AdaptedGrid& grid, int stride) {
  if (stride < 1) throw std::invalid_argument("boundary_node_samples: stride must be >= 1");
  const int n = grid.n;
  std::array<std::int64_t, kMaxBoundaryDim> per{};
  std::int64_t total = 1;
  for (int a = 0; a < n; ++a) {
    per[static_cast<std::size_t>(a)] = grid.count[static_cast<std::size_t>(a)] / stride + 1;
    total *= per[static_cast<std::size_t>(a)];
  }
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(total));
  for (std::int64_t k = 0; k < total; ++k) {
    Vec x(n);
    std::int64_t rest = k;
    for (int a = n - 1; a >= 0; --a) {
      const auto ua = static_cast<std::size_t>(a);
      x[a] = grid.origin[a] + static_cast<double>((rest % per[ua]) * stride) * grid.spacing[ua];
      rest /= per[ua];
    }
    out.push_back(x);
  }
  return out;
}

}  // namespace ealab
