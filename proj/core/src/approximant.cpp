#include "ealab/approximant.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ealab/parallel.hpp"

namespace ealab {

namespace {

using Index = std::array<std::int64_t, kMaxBoundaryDim>;

template <typename Fn>
void for_each_in_box(const AdaptedGrid& g, const CellIndex& lo, const CellIndex& hi, Fn&& fn) {
  const int axes = g.axes();
  for (int a = 0; a < axes; ++a) {
    if (lo[static_cast<std::size_t>(a)] >= hi[static_cast<std::size_t>(a)]) return;
  }
  CellIndex idx = lo;
  const int last = axes - 1;
  const auto ul = static_cast<std::size_t>(last);
  while (true) {
    std::int64_t base = g.flatten(idx);
    for (std::int64_t h = lo[ul]; h < hi[ul]; ++h) fn(base + (h - lo[ul]));
    int a = last - 1;
    for (; a >= 0; --a) {
      const auto ua = static_cast<std::size_t>(a);
      if (++idx[ua] < hi[ua]) break;
      idx[ua] = lo[ua];
    }
    if (a < 0) return;
  }
}

CellIndex clamp_lo(CellIndex lo, int axes, std::int64_t by) {
  for (int a = 0; a < axes; ++a) lo[static_cast<std::size_t>(a)] = std::max<std::int64_t>(0, lo[static_cast<std::size_t>(a)] - by);
  return lo;
}

CellIndex clamp_hi(const AdaptedGrid& g, CellIndex hi, std::int64_t by) {
  for (int a = 0; a < g.axes(); ++a) {
    const auto ua = static_cast<std::size_t>(a);
    hi[ua] = std::min(g.count[ua], hi[ua] + by);
  }
  return hi;
}

struct BoxStats {
  double lo = 0.0;
  double hi = 0.0;
  double grad_max = 0.0;
};

// Sampled extremes of u over [lo, hi) and max |grad u| over the box grown by
// one cell, which bounds the gradient between a sample and the box edge.
BoxStats box_stats(const StoppingForest& f, const CellIndex& lo, const CellIndex& hi) {
  const auto& g = f.grid();
  BoxStats s;
  bool first = true;
  for_each_in_box(g, lo, hi, [&](std::int64_t c) {
    const double v = f.cell_u()[static_cast<std::size_t>(c)];
    if (first) {
      s.lo = s.hi = v;
      first = false;
    }
    s.lo = std::min(s.lo, v);
    s.hi = std::max(s.hi, v);
  });
  for_each_in_box(g, clamp_lo(lo, g.axes(), 1), clamp_hi(g, hi, 1), [&](std::int64_t c) {
    s.grad_max = std::max(s.grad_max, f.cell_grad()[static_cast<std::size_t>(c)]);
  });
  return s;
}

double sampling_error(const StoppingForest& f, double grad_max) {
  return 2.0 * grad_max * (1.0 + f.lipschitz()) * f.grid().half_diagonal();
}

std::pair<CellIndex, CellIndex> cube_box(const AdaptedGrid& g, int grid_depth, int m, const Index& j) {
  const std::int64_t s = std::int64_t{1} << (grid_depth - m);
  CellIndex lo{}, hi{};
  for (int a = 0; a < g.n; ++a) {
    lo[static_cast<std::size_t>(a)] = j[static_cast<std::size_t>(a)] * s;
    hi[static_cast<std::size_t>(a)] = lo[static_cast<std::size_t>(a)] + s;
  }
  hi[static_cast<std::size_t>(g.n)] = s;
  return {lo, hi};
}

// Rows [s/2, 3s/2) of T(Q^); the root keeps only its upper half [s/2, s).
std::pair<CellIndex, CellIndex> translated_box(const AdaptedGrid& g, int grid_depth, int m, const Index& j) {
  auto [lo, hi] = cube_box(g, grid_depth, m, j);
  const auto un = static_cast<std::size_t>(g.n);
  const std::int64_t s = hi[un];
  lo[un] = s / 2;
  hi[un] = m == 0 ? s : s + s / 2;
  return {lo, hi};
}

Index index_of(int n, int m, std::int64_t lin) {
  Index j{};
  for (int a = n - 1; a >= 0; --a) {
    j[static_cast<std::size_t>(a)] = lin & ((std::int64_t{1} << m) - 1);
    lin >>= m;
  }
  return j;
}

struct Tag {
  Color color = Color::unset;
  double osc = 0.0;
  double err = 0.0;
  double grad = 0.0;
};

Tag tag_box(const StoppingForest& f, const CellIndex& lo, const CellIndex& hi, double threshold) {
  const BoxStats s = box_stats(f, lo, hi);
  double grad_sum = 0.0;
  for_each_in_box(f.grid(), lo, hi, [&](std::int64_t c) { grad_sum += f.cell_grad()[static_cast<std::size_t>(c)]; });
  Tag t;
  t.osc = s.hi - s.lo;
  t.err = sampling_error(f, s.grad_max);
  t.grad = grad_sum * f.grid().cell_volume();
  t.color = t.osc + t.err <= threshold ? Color::blue : Color::red;
  return t;
}

// Summed-area table over an (n+1)-dimensional array with arbitrary extents.
class PrefixTable {
 public:
  PrefixTable(int axes, std::array<std::int64_t, kMaxAmbientDim> extent, std::vector<double> values)
      : axes_(axes), extent_(extent) {
    std::int64_t s = 1;
    for (int a = axes_ - 1; a >= 0; --a) {
      stride_[static_cast<std::size_t>(a)] = s;
      s *= extent_[static_cast<std::size_t>(a)] + 1;
    }
    table_.assign(static_cast<std::size_t>(s), 0.0);
    const std::int64_t total = static_cast<std::int64_t>(values.size());
    for (std::int64_t k = 0; k < total; ++k) {
      std::int64_t rest = k, p = 0;
      for (int a = axes_ - 1; a >= 0; --a) {
        const auto ua = static_cast<std::size_t>(a);
        p += (rest % extent_[ua] + 1) * stride_[ua];
        rest /= extent_[ua];
      }
      table_[static_cast<std::size_t>(p)] = values[static_cast<std::size_t>(k)];
    }
    for (int a = 0; a < axes_; ++a) {
      const auto st = stride_[static_cast<std::size_t>(a)];
      const auto len = extent_[static_cast<std::size_t>(a)] + 1;
      for (std::int64_t p = 0; p < s; ++p) {
        if ((p / st) % len != 0) table_[static_cast<std::size_t>(p)] += table_[static_cast<std::size_t>(p - st)];
      }
    }
  }

  double sum(const CellIndex& lo, const CellIndex& hi) const {
    double total = 0.0;
    for (int mask = 0; mask < (1 << axes_); ++mask) {
      std::int64_t p = 0;
      int sign = 1;
      for (int a = 0; a < axes_; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        if (mask & (1 << a)) {
          p += lo[ua] * stride_[ua];
          sign = -sign;
        } else {
          p += hi[ua] * stride_[ua];
        }
      }
      total += sign * table_[static_cast<std::size_t>(p)];
    }
    return total;
  }

 private:
  int axes_;
  std::array<std::int64_t, kMaxAmbientDim> extent_{};
  std::array<std::int64_t, kMaxAmbientDim> stride_{};
  std::vector<double> table_;
};

}  // namespace

void ForestOptions::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (!(k_blue > 0.0)) throw std::invalid_argument("k_blue must be > 0");
  if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
  if (grid_depth < max_depth + 2) throw std::invalid_argument("grid_depth must be >= max_depth + 2");
  if (grid_depth > 14) throw std::invalid_argument("grid_depth must be <= 14");
}

std::int64_t StoppingForest::level_size(int m) const { return std::int64_t{1} << (n_ * m); }

std::int64_t StoppingForest::level_offset(int m) const {
  std::int64_t off = 0;
  for (int k = 0; k < m; ++k) off += level_size(k);
  return off;
}

std::int64_t StoppingForest::id_of(int m, const Index& j) const {
  std::int64_t lin = 0;
  for (int a = 0; a < n_; ++a) lin = (lin << m) | j[static_cast<std::size_t>(a)];
  return level_offset(m) + lin;
}

std::int64_t StoppingForest::parent(std::int64_t id) const {
  const ForestNode& nd = node(id);
  if (nd.m == 0) return -1;
  Index j{};
  for (int a = 0; a < n_; ++a) j[static_cast<std::size_t>(a)] = nd.j[static_cast<std::size_t>(a)] >> 1;
  return id_of(nd.m - 1, j);
}

std::vector<std::int64_t> StoppingForest::children(std::int64_t id) const {
  const ForestNode& nd = node(id);
  std::vector<std::int64_t> out;
  if (nd.m >= opts_.max_depth) return out;
  for (int bits = 0; bits < (1 << n_); ++bits) {
    Index j{};
    for (int a = 0; a < n_; ++a) {
      j[static_cast<std::size_t>(a)] = 2 * nd.j[static_cast<std::size_t>(a)] + ((bits >> (n_ - 1 - a)) & 1);
    }
    out.push_back(id_of(nd.m + 1, j));
  }
  return out;
}

CurvedCube StoppingForest::cube(std::int64_t id) const {
  const ForestNode& nd = node(id);
  return {nd.m, nd.j, root_};
}

double StoppingForest::side(std::int64_t id) const { return std::ldexp(root_.side, -node(id).m); }

std::vector<std::int64_t> StoppingForest::g_nodes() const {
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].in_g) out.push_back(static_cast<std::int64_t>(i));
  }
  return out;
}

std::vector<std::int64_t> StoppingForest::g_children(std::int64_t id) const {
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].selected && nodes_[i].governor == id) out.push_back(static_cast<std::int64_t>(i));
  }
  return out;
}

std::size_t StoppingForest::selected_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const ForestNode& nd) { return nd.selected; }));
}

std::vector<std::size_t> StoppingForest::selected_per_generation() const {
  std::vector<std::size_t> out;
  for (const auto& nd : nodes_) {
    if (nd.generation < 0) continue;
    if (out.size() <= static_cast<std::size_t>(nd.generation)) out.resize(static_cast<std::size_t>(nd.generation) + 1, 0);
    ++out[static_cast<std::size_t>(nd.generation)];
  }
  return out;
}

double StoppingForest::unresolved_fraction() const {
  return cell_owner_.empty() ? 0.0 : static_cast<double>(unresolved_cells_) / static_cast<double>(cell_owner_.size());
}

std::size_t StoppingForest::unresolved_leaves() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const ForestNode& nd) { return nd.unresolved; }));
}

std::pair<CellIndex, CellIndex> StoppingForest::cube_cells(std::int64_t id) const {
  const ForestNode& nd = node(id);
  return cube_box(grid_, opts_.grid_depth, nd.m, nd.j);
}

std::pair<CellIndex, CellIndex> StoppingForest::translated_cells(std::int64_t id) const {
  const ForestNode& nd = node(id);
  return translated_box(grid_, opts_.grid_depth, nd.m, nd.j);
}

StoppingForest build_forest(const ScalarField& field, const LipschitzGraph& graph, const RootCube& root,
                            const ForestOptions& opts) {
  opts.validate();
  const int n = graph.dim();
  if (field.n != n || root.origin.size() != n) throw std::invalid_argument("field, graph and root dimensions differ");
  if (!(root.side > 0.0)) throw std::invalid_argument("root side must be > 0");
  const int D = opts.max_depth;
  const int gd = opts.grid_depth;
  if (n * (gd + 1) > 24) throw std::invalid_argument("grid too large: reduce grid_depth");

  StoppingForest f;
  f.root_ = root;
  f.opts_ = opts;
  f.n_ = n;
  f.L_ = graph.lipschitz();
  f.grid_ = AdaptedGrid::over_root(root, gd);
  f.nodes_.resize(static_cast<std::size_t>(f.level_offset(D + 1)));

  for (int m = 0; m <= D; ++m) {
    const std::int64_t off = f.level_offset(m);
    parallel_for(static_cast<std::size_t>(f.level_size(m)), [&](std::size_t lin) {
      ForestNode& nd = f.nodes_[static_cast<std::size_t>(off) + lin];
      nd.m = m;
      nd.j = index_of(n, m, static_cast<std::int64_t>(lin));
      const CubeCenters c = centers(graph, CurvedCube{m, nd.j, root});
      nd.center_value = field.u(c.center);
      nd.upper_value = field.u(c.upper);
    });
  }

  ForestNode& root_node = f.nodes_.front();
  root_node.in_g = true;
  root_node.generation = 0;
  for (int m = 1; m <= D; ++m) {
    const std::int64_t off = f.level_offset(m);
    for (std::int64_t lin = 0; lin < f.level_size(m); ++lin) {
      const std::int64_t id = off + lin;
      const std::int64_t p = f.parent(id);
      const ForestNode& pn = f.node(p);
      ForestNode& nd = f.nodes_[static_cast<std::size_t>(id)];
      nd.governor = pn.in_g ? p : pn.governor;
      const ForestNode& gov = f.node(nd.governor);
      if (std::abs(gov.center_value - nd.upper_value) > opts.epsilon) {
        nd.selected = nd.in_g = true;
        nd.generation = gov.generation + 1;
      }
    }
  }

  // Leaves whose children would still fire the stopping condition.
  {
    const std::int64_t off = f.level_offset(D);
    parallel_for(static_cast<std::size_t>(f.level_size(D)), [&](std::size_t lin) {
      ForestNode& nd = f.nodes_[static_cast<std::size_t>(off) + lin];
      const std::int64_t ref = nd.in_g ? off + static_cast<std::int64_t>(lin) : nd.governor;
      const double ref_value = f.node(ref).center_value;
      for (const auto& child : dyadic_children(CurvedCube{D, nd.j, root})) {
        if (std::abs(ref_value - field.u(centers(graph, child).upper)) > opts.epsilon) {
          nd.unresolved = true;
          break;
        }
      }
    });
  }

  const auto cells = static_cast<std::size_t>(f.grid_.cells());
  f.cell_u_.resize(cells);
  f.cell_grad_.resize(cells);
  f.cell_owner_.resize(cells);
  const std::int64_t nh = f.grid_.count[static_cast<std::size_t>(n)];
  parallel_for(cells / static_cast<std::size_t>(nh), [&](std::size_t column) {
    for (std::int64_t ih = 0; ih < nh; ++ih) {
      const std::int64_t c = static_cast<std::int64_t>(column) * nh + ih;
      const DomainPoint p = to_cartesian(graph, f.grid_.center(c));
      f.cell_u_[static_cast<std::size_t>(c)] = field.u(p);
      f.cell_grad_[static_cast<std::size_t>(c)] = field.grad(p).norm();
    }
  });

  // Owner: the deepest G cube whose curved cube contains the cell.
  std::vector<std::uint8_t> unresolved_cell(cells, 0);
  parallel_for(cells / static_cast<std::size_t>(nh), [&](std::size_t column) {
    for (std::int64_t ih = 0; ih < nh; ++ih) {
      const std::int64_t c = static_cast<std::int64_t>(column) * nh + ih;
      const CellIndex idx = f.grid_.unflatten(c);
      const int width = static_cast<int>(std::bit_width(static_cast<std::uint64_t>(ih)));
      const int mstar = std::min(D, gd - width);
      Index j{};
      for (int a = 0; a < n; ++a) j[static_cast<std::size_t>(a)] = idx[static_cast<std::size_t>(a)] >> (gd - mstar);
      const std::int64_t id = f.id_of(mstar, j);
      const ForestNode& nd = f.node(id);
      f.cell_owner_[static_cast<std::size_t>(c)] = nd.in_g ? id : nd.governor;
      if (mstar == D && nd.unresolved) unresolved_cell[static_cast<std::size_t>(c)] = 1;
    }
  });
  f.unresolved_cells_ = static_cast<std::size_t>(std::count(unresolved_cell.begin(), unresolved_cell.end(), 1));
  return f;
}

void red_blue_classify(StoppingForest& forest) {
  const double threshold = forest.options().k_blue * forest.options().epsilon;
  const AdaptedGrid& g = forest.grid();
  const int n = forest.dim();
  const int D = forest.options().max_depth;
  const int gd = forest.options().grid_depth;
  auto& nodes = forest.nodes_;
  parallel_for(nodes.size(), [&](std::size_t i) {
    const auto [lo, hi] = forest.translated_cells(static_cast<std::int64_t>(i));
    const Tag t = tag_box(forest, lo, hi, threshold);
    ForestNode& nd = nodes[i];
    nd.color = t.color;
    nd.t_osc = t.osc;
    nd.t_err = t.err;
    nd.t_grad = t.grad;
  });

  auto& mask = forest.red_mask_;
  mask.assign(static_cast<std::size_t>(g.cells()), 0);
  auto mark = [&](const CellIndex& lo, const CellIndex& hi) {
    for_each_in_box(g, lo, hi, [&](std::int64_t c) { mask[static_cast<std::size_t>(c)] = 1; });
  };
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].color != Color::red) continue;
    const auto [lo, hi] = forest.translated_cells(static_cast<std::int64_t>(i));
    mark(lo, hi);
  }

  forest.below_red_grad_.assign(nodes.size(), 0.0);
  forest.below_red_size_.assign(nodes.size(), 0.0);
  for (int m = D + 1; m < gd; ++m) {
    const auto count = static_cast<std::size_t>(forest.level_size(m));
    std::vector<Tag> tags(count);
    parallel_for(count, [&](std::size_t lin) {
      const auto [lo, hi] = translated_box(g, gd, m, index_of(n, m, static_cast<std::int64_t>(lin)));
      tags[lin] = tag_box(forest, lo, hi, threshold);
    });
    const double ln = std::pow(std::ldexp(forest.root().side, -m), n);
    for (std::size_t lin = 0; lin < count; ++lin) {
      if (tags[lin].color != Color::red) continue;
      Index j = index_of(n, m, static_cast<std::int64_t>(lin));
      const auto [lo, hi] = translated_box(g, gd, m, j);
      mark(lo, hi);
      for (int a = 0; a < n; ++a) j[static_cast<std::size_t>(a)] >>= (m - D);
      const auto leaf = static_cast<std::size_t>(forest.id_of(D, j));
      forest.below_red_grad_[leaf] += tags[lin].grad;
      forest.below_red_size_[leaf] += ln;
    }
  }
}

Phi1 build_phi1(const StoppingForest& forest) {
  Phi1 out;
  const auto& owner = forest.cell_owner();
  out.values.resize(owner.size());
  for (std::size_t c = 0; c < owner.size(); ++c) out.values[c] = forest.node(owner[c]).center_value;
  out.unresolved_cells = forest.unresolved_cells();
  return out;
}

bool ApproximantField::contains(const LipschitzGraph& graph, const DomainPoint& p) const {
  const int n = grid.n;
  for (int a = 0; a < n; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    const double t = (p.x[a] - grid.origin[a]) / grid.spacing[ua];
    if (t < 0.0 || t > static_cast<double>(grid.count[ua])) return false;
  }
  const double h = p.height(graph);
  const auto un = static_cast<std::size_t>(n);
  return h >= 0.0 && h <= grid.spacing[un] * static_cast<double>(grid.count[un]);
}

double ApproximantField::evaluate(const ScalarField& field, const LipschitzGraph& graph, const DomainPoint& p) const {
  if (!contains(graph, p)) throw std::out_of_range("point outside the approximant's curved cube");
  CellIndex idx{};
  const int n = grid.n;
  for (int a = 0; a <= n; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    const double coord = a < n ? p.x[a] : p.height(graph);
    auto k = static_cast<std::int64_t>(std::floor((coord - grid.origin[a]) / grid.spacing[ua]));
    idx[ua] = std::clamp<std::int64_t>(k, 0, grid.count[ua] - 1);
  }
  const auto c = static_cast<std::size_t>(grid.flatten(idx));
  return red[c] ? field.u(p) : phi1[c];
}

ApproximantField build_approximant(const StoppingForest& forest, const ScalarField& field,
                                   const LipschitzGraph& graph) {
  if (forest.red_mask().empty()) throw std::logic_error("build_approximant: run red_blue_classify first");
  const AdaptedGrid& g = forest.grid();
  const int n = g.n;
  const auto cells = static_cast<std::size_t>(g.cells());
  ApproximantField out;
  out.grid = g;
  out.phi1 = build_phi1(forest).values;
  out.red = forest.red_mask();
  out.values.resize(cells);
  std::size_t worst = 0;
  for (std::size_t c = 0; c < cells; ++c) {
    out.values[c] = out.red[c] ? forest.cell_u()[c] : out.phi1[c];
    out.red_cells += out.red[c];
    const double err = std::abs(forest.cell_u()[c] - out.values[c]);
    if (err > out.sup_error) {
      out.sup_error = err;
      worst = c;
    }
  }
  out.witness = to_cartesian(graph, g.center(static_cast<std::int64_t>(worst)));

  // Below half a leaf the cells sit in no translated box; bound them by the
  // oscillation over the leaf and its translate.
  const int D = forest.options().max_depth;
  const std::int64_t off = forest.level_offset(D);
  for (std::int64_t lin = 0; lin < forest.level_size(D); ++lin) {
    auto [lo, hi] = forest.cube_cells(off + lin);
    hi[static_cast<std::size_t>(n)] += hi[static_cast<std::size_t>(n)] / 2;
    const BoxStats s = box_stats(forest, lo, hi);
    out.grid_term = std::max(out.grid_term, s.hi - s.lo + sampling_error(forest, s.grad_max));
  }
  const double eps = forest.options().epsilon;
  out.bound = (forest.options().k_blue + 1.0) * eps + out.grid_term;
  out.unresolved_cells = forest.unresolved_cells();
  out.unresolved_fraction = forest.unresolved_fraction();

  out.jump = CellMeasure(g);
  for (int a = 0; a <= n; ++a) {
    const auto stride = g.stride(a);
    const auto count = g.count[static_cast<std::size_t>(a)];
    auto& faces = out.jump.face_weights(a);
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(cells); ++c) {
      if ((c / stride) % count == count - 1) continue;
      const auto uc = static_cast<std::size_t>(c);
      const auto un = static_cast<std::size_t>(c + stride);
      if (out.red[uc] == out.red[un]) continue;
      Vec mid = g.center(c);
      mid[a] += 0.5 * g.spacing[static_cast<std::size_t>(a)];
      const double outside = out.red[uc] ? out.phi1[un] : out.phi1[uc];
      faces[uc] = std::abs(field.u(to_cartesian(graph, mid)) - outside) * face_area_cartesian(g, graph, c, a);
    }
  }

  if (out.sup_error > out.bound * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "approximation error " << out.sup_error << " exceeds bound " << out.bound;
    throw ConstructionError(msg.str(), out.witness);
  }
  return out;
}

CarlesonDecomposition carleson_decomposition(const ApproximantField& approx, const StoppingForest& forest,
                                             const LipschitzGraph& graph, const CarlesonOptions& opts) {
  const AdaptedGrid& g = approx.grid;
  const int n = g.n;
  CarlesonDecomposition out;
  out.mu1 = total_variation_piecewise(g, graph, approx.phi1);
  out.mu2 = CellMeasure(g);
  const double vol = g.cell_volume();
  for (std::size_t c = 0; c < approx.red.size(); ++c) {
    if (approx.red[c]) out.mu2.volume_weights()[c] = forest.cell_grad()[c] * vol;
  }
  out.mu3 = approx.jump;

  const int levels = opts.radius_levels > 0 ? opts.radius_levels : forest.options().max_depth + 1;
  const auto radii = dyadic_radii(forest.root().side, levels);
  const int per_axis = std::max(2, opts.boundary_samples);
  const int stride = std::max<int>(1, static_cast<int>(g.count[0] / (per_axis - 1)));
  const auto samples = boundary_node_samples(g, stride);
  out.c1 = carleson_constant(out.mu1, graph, radii, samples);
  out.c2 = carleson_constant(out.mu2, graph, radii, samples);
  out.c3 = carleson_constant(out.mu3, graph, radii, samples);

  // Red sums over each dyadic subtree, children before parents.
  const auto& nodes = forest.nodes();
  std::vector<double> sub1 = forest.below_red_grad(), sub2 = forest.below_red_size();
  const double eps = forest.options().epsilon;
  for (auto id = static_cast<std::int64_t>(nodes.size()) - 1; id >= 0; --id) {
    const auto ui = static_cast<std::size_t>(id);
    const double ln = std::pow(forest.side(id), n);
    if (nodes[ui].color == Color::red) {
      sub1[ui] += nodes[ui].t_grad;
      sub2[ui] += ln;
    }
    const double r1 = eps * sub1[ui] / ln;
    const double r2 = eps * eps * sub2[ui] / ln;
    if (r1 >= out.car1_max) {
      out.car1_max = r1;
      out.car1_node = id;
    }
    if (r2 >= out.car2_max) {
      out.car2_max = r2;
      out.car2_node = id;
    }
    const std::int64_t p = forest.parent(id);
    if (p >= 0) {
      sub1[static_cast<std::size_t>(p)] += sub1[ui];
      sub2[static_cast<std::size_t>(p)] += sub2[ui];
    }
  }
  return out;
}

StoppingSums stopping_sums(const StoppingForest& forest) {
  const AdaptedGrid& g = forest.grid();
  const int n = g.n;
  const int axes = n + 1;
  const auto& owner = forest.cell_owner();

  // Per axis: weight of every face plane slot, counted once per R-region it bounds.
  std::vector<PrefixTable> tables;
  for (int a = 0; a < axes; ++a) {
    auto extent = g.count;
    extent[static_cast<std::size_t>(a)] += 1;
    std::int64_t total = 1;
    for (int b = 0; b < axes; ++b) total *= extent[static_cast<std::size_t>(b)];
    std::vector<double> w(static_cast<std::size_t>(total), 0.0);
    const double area = g.face_area(a);
    const auto count_a = g.count[static_cast<std::size_t>(a)];
    for (std::int64_t k = 0; k < total; ++k) {
      CellIndex idx{};
      std::int64_t rest = k;
      for (int b = axes - 1; b >= 0; --b) {
        idx[static_cast<std::size_t>(b)] = rest % extent[static_cast<std::size_t>(b)];
        rest /= extent[static_cast<std::size_t>(b)];
      }
      const std::int64_t plane = idx[static_cast<std::size_t>(a)];
      if (plane == 0 || plane == count_a) {
        w[static_cast<std::size_t>(k)] = area;
        continue;
      }
      CellIndex below = idx;
      below[static_cast<std::size_t>(a)] = plane - 1;
      const auto c_lo = static_cast<std::size_t>(g.flatten(below));
      const auto c_hi = static_cast<std::size_t>(g.flatten(idx));
      if (owner[c_lo] != owner[c_hi]) w[static_cast<std::size_t>(k)] = 2.0 * area;
    }
    tables.emplace_back(axes, extent, std::move(w));
  }

  const auto& nodes = forest.nodes();
  std::vector<double> s2(nodes.size(), 0.0);
  for (auto id = static_cast<std::int64_t>(nodes.size()) - 1; id >= 0; --id) {
    const auto ui = static_cast<std::size_t>(id);
    if (nodes[ui].in_g) s2[ui] += std::pow(forest.side(id), n);
    const std::int64_t p = forest.parent(id);
    if (p >= 0) s2[static_cast<std::size_t>(p)] += s2[ui];
  }

  StoppingSums out;
  const double eps2 = forest.options().epsilon * forest.options().epsilon;
  const double lift = std::sqrt(1.0 + forest.lipschitz() * forest.lipschitz());
  for (const std::int64_t id : forest.g_nodes()) {
    const auto [lo, hi] = forest.cube_cells(id);
    double s1 = 0.0;
    for (int a = 0; a < axes; ++a) {
      CellIndex plane_hi = hi;
      plane_hi[static_cast<std::size_t>(a)] += 1;  // closed: both bounding planes
      s1 += tables[static_cast<std::size_t>(a)].sum(lo, plane_hi);
    }
    StoppingSumRow row;
    row.node = id;
    row.s1_lower = s1;
    row.s1_upper = s1 * lift;
    row.s2 = s2[static_cast<std::size_t>(id)];
    const double ln = std::pow(forest.side(id), n);
    row.r1 = row.s1_upper * eps2 / ln;
    row.r2 = row.s2 * eps2 / ln;
    out.r1_max = std::max(out.r1_max, row.r1);
    out.r2_max = std::max(out.r2_max, row.r2);
    out.rows.push_back(row);
  }
  return out;
}

AdaptedRegion rtilde_region(const StoppingForest& forest, const LipschitzGraph& graph, std::int64_t node,
                            double alpha) {
  ConeSpec{alpha, 0.0, 1.0}.validate_for(graph);
  struct Piece {
    Vec lo, hi;
    double l;
    bool red;
  };
  std::vector<Piece> pieces;
  for (const std::int64_t j : forest.g_children(node)) {
    const CurvedCube q = forest.cube(j);
    const Vec lo = q.lower_corner();
    Vec hi = lo;
    for (int a = 0; a < hi.size(); ++a) hi[a] += q.side();
    pieces.push_back({lo, hi, q.side(), forest.node(j).color == Color::red});
  }
  return [pieces = std::move(pieces), graph, alpha](const Vec& x, double h) {
    const int n = x.size();
    constexpr int kDeck = 8;
    for (const auto& pc : pieces) {
      if (pc.red) {
        bool in = h >= 0.5 * pc.l && h <= 1.5 * pc.l;
        for (int a = 0; a < n && in; ++a) in = x[a] >= pc.lo[a] && x[a] <= pc.hi[a];
        if (in) return true;
        continue;
      }
      if (!(h > pc.l && h < 1.5 * pc.l)) continue;
      // Vertex X = (x', phi(x') + l) on the upper deck; need |x - x'| < alpha (y - phi(x') - l).
      const double y = graph(x) + h;
      auto captures = [&](const Vec& xp) { return distance(x, xp) < alpha * (y - graph(xp) - pc.l); };
      Vec proj(n);
      for (int a = 0; a < n; ++a) proj[a] = std::clamp(x[a], pc.lo[a], pc.hi[a]);
      if (captures(proj)) return true;
      if (graph.is_flat()) continue;
      long total = 1;
      for (int a = 0; a < n; ++a) total *= kDeck + 1;
      for (long k = 0; k < total; ++k) {
        Vec xp(n);
        long rest = k;
        for (int a = 0; a < n; ++a) {
          xp[a] = pc.lo[a] + (pc.hi[a] - pc.lo[a]) * static_cast<double>(rest % (kDeck + 1)) / kDeck;
          rest /= kDeck + 1;
        }
        if (captures(xp)) return true;
      }
    }
    return false;
  };
}

Lemma22Report lemma22_check(const StoppingForest& forest, const ScalarField& field, const LipschitzGraph& graph,
                            double alpha) {
  (void)field;  // integrand comes from the forest's cell samples of this field
  const AdaptedGrid& g = forest.grid();
  const int n = g.n;
  const double L = graph.lipschitz();
  const double vol = g.cell_volume();
  const double eps2 = forest.options().epsilon * forest.options().epsilon;
  Lemma22Report out;
  for (const std::int64_t id : forest.g_nodes()) {
    const auto kids = forest.g_children(id);
    if (kids.empty()) continue;
    ++out.nodes;
    const AdaptedRegion region = rtilde_region(forest, graph, id, alpha);
    std::vector<std::int64_t> cells;
    double lsum = 0.0;
    for (const std::int64_t j : kids) {
      lsum += std::pow(forest.side(j), n);
      auto [lo, hi] = forest.cube_cells(j);
      const auto un = static_cast<std::size_t>(n);
      const std::int64_t s = hi[un];
      const double reach = alpha * 0.5 * forest.side(j) / (1.0 - alpha * L);
      const auto grow = static_cast<std::int64_t>(std::ceil(reach / g.spacing[0])) + 1;
      for (int a = 0; a < n; ++a) {
        lo[static_cast<std::size_t>(a)] = std::max<std::int64_t>(0, lo[static_cast<std::size_t>(a)] - grow);
        hi[static_cast<std::size_t>(a)] = std::min(g.count[static_cast<std::size_t>(a)], hi[static_cast<std::size_t>(a)] + grow);
      }
      lo[un] = s / 2;
      hi[un] = std::min(g.count[un], s + s / 2);
      for_each_in_box(g, lo, hi, [&](std::int64_t c) {
        const Vec centre = g.center(c);
        Vec x(n);
        for (int a = 0; a < n; ++a) x[a] = centre[a];
        if (region(x, centre[n])) cells.push_back(c);
      });
    }
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    double integral = 0.0;
    for (const std::int64_t c : cells) {
      const double gr = forest.cell_grad()[static_cast<std::size_t>(c)];
      integral += gr * gr * g.center(c)[n] * vol;
    }
    if (integral <= 0.0) {
      out.infinite = true;
      out.witness = id;
      continue;
    }
    const double ratio = eps2 * lsum / integral;
    if (ratio > out.ratio_max) {
      out.ratio_max = ratio;
      if (!out.infinite) out.witness = id;
    }
  }
  return out;
}

Prop24Report prop24_check(const ScalarField& field, const LipschitzGraph& graph, const RootCube& root, double alpha,
                          const Prop24Options& opts) {
  if (opts.gen_lo < 0 || opts.gen_hi < opts.gen_lo) throw std::invalid_argument("prop24: bad generation range");
  if (opts.samples_per_cube < 1 || opts.relative_depth < 1) throw std::invalid_argument("prop24: bad sampling");
  const int n = graph.dim();
  Prop24Report out;
  for (int m = opts.gen_lo; m <= opts.gen_hi; ++m) {
    const double l = std::ldexp(root.side, -m);
    const int depth = std::clamp(opts.relative_depth + static_cast<int>(std::ceil(-std::log2(l))), 2, 14);
    const std::int64_t per_level = std::int64_t{1} << (n * m);
    const int s = opts.samples_per_cube;
    std::int64_t per_cube = 1;
    for (int a = 0; a < n; ++a) per_cube *= s;
    for (std::int64_t lin = 0; lin < per_level; ++lin) {
      CurvedCube q{m, {}, root};
      std::int64_t rest = lin;
      for (int a = n - 1; a >= 0; --a) {
        q.j[static_cast<std::size_t>(a)] = rest & ((std::int64_t{1} << m) - 1);
        rest >>= m;
      }
      const Vec corner = q.lower_corner();
      double acc = 0.0;
      for (std::int64_t k = 0; k < per_cube; ++k) {
        Vec x(n);
        std::int64_t r2 = k;
        for (int a = 0; a < n; ++a) {
          x[a] = corner[a] + (static_cast<double>(r2 % s) + 0.5) * l / s;
          r2 /= s;
        }
        const double A = area_function(field, graph, x, ConeSpec{alpha, 0.0, l}, {depth, 4}).value;
        acc += A * A;
      }
      // int_Q A^2 / l^n is the sample mean of A^2.
      Prop24Row row{m, q.j, acc / static_cast<double>(per_cube)};
      out.rows.push_back(row);
    }
  }
  double lo = 0.0;
  for (const auto& r : out.rows) {
    out.max_ratio = std::max(out.max_ratio, r.ratio);
    if (r.ratio > 0.0 && (lo == 0.0 || r.ratio < lo)) lo = r.ratio;
  }
  out.min_ratio = lo;
  out.spread = lo > 0.0 ? out.max_ratio / lo : 0.0;
  return out;
}

int GlobalExtension::serving_part(const LipschitzGraph& graph, const DomainPoint& p) const {
  for (std::size_t k = 0; k < cubes.size(); ++k) {
    if (parts[k].contains(graph, p)) return static_cast<int>(k);
  }
  return -1;
}

double GlobalExtension::evaluate(const ScalarField& field, const LipschitzGraph& graph, const DomainPoint& p) const {
  const int k = serving_part(graph, p);
  if (k < 0) throw std::out_of_range("point outside the largest cube of the extension");
  return parts[static_cast<std::size_t>(k)].evaluate(field, graph, p);
}

GlobalExtension global_extension(const ScalarField& field, const LipschitzGraph& graph, const Vec& x0, int K,
                                 const ForestOptions& opts) {
  if (K < 1) throw std::invalid_argument("global_extension: K must be >= 1");
  if (K > 20) throw std::invalid_argument("global_extension: K must be <= 20");
  GlobalExtension out;
  for (int k = 1; k <= K; ++k) {
    const RootCube cube = RootCube::centered(x0, std::ldexp(1.0, k));
    StoppingForest forest = build_forest(field, graph, cube, opts);
    red_blue_classify(forest);
    out.cubes.push_back(cube);
    out.parts.push_back(build_approximant(forest, field, graph));
    out.part_errors.push_back(out.parts.back().sup_error);
  }
  // Each cell centre is served by the smallest cube containing it.
  for (std::size_t k = 0; k < out.parts.size(); ++k) {
    const ApproximantField& part = out.parts[k];
    for (std::int64_t c = 0; c < part.grid.cells(); ++c) {
      const DomainPoint p = to_cartesian(graph, part.grid.center(c));
      if (out.serving_part(graph, p) != static_cast<int>(k)) continue;
      out.sup_error = std::max(out.sup_error, std::abs(field.u(p) - part.values[static_cast<std::size_t>(c)]));
    }
  }
  return out;
}

}  // namespace ealab
