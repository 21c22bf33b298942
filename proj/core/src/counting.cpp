#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "ealab/operators.hpp"

namespace ealab {

namespace {

// Best chain length with its start position; longer wins, then the earlier
// position in distance order so results are deterministic.
struct Best {
  std::size_t length = 0;
  std::size_t pos = 0;

  bool better_than(const Best& o) const { return length > o.length || (length == o.length && length > 0 && pos < o.pos); }
};

// Fenwick tree answering max over a prefix [0, k).
class PrefixMax {
 public:
  explicit PrefixMax(std::size_t size) : tree_(size + 1) {}

  void update(std::size_t i, const Best& v) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) {
      if (v.better_than(tree_[i])) tree_[i] = v;
    }
  }

  Best query(std::size_t k) const {
    Best out;
    for (; k > 0; k -= k & (~k + 1)) {
      if (tree_[k].better_than(out)) out = tree_[k];
    }
    return out;
  }

 private:
  std::vector<Best> tree_;
};

}  // namespace

void CountingParams::validate() const {
  if (!(r > 0.0)) throw std::invalid_argument("r must be > 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
}

CountingResult longest_chain(std::span<const DomainPoint> points, std::span<const double> values,
                             const Vec& vertex_ambient, double epsilon, double beta) {
  if (points.size() != values.size()) throw std::invalid_argument("longest_chain: size mismatch");
  const std::size_t m = points.size();
  CountingResult out;
  out.samples = m;
  if (m == 0) return out;

  std::vector<double> dist(m);
  for (std::size_t i = 0; i < m; ++i) dist[i] = distance(points[i].ambient(), vertex_ambient);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });

  std::vector<double> levels(values.begin(), values.end());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  const std::size_t nl = levels.size();
  auto rank_of = [&](double v) {
    return static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), v) - levels.begin());
  };

  // below: ranked by u ascending; above: ranked by u descending.
  PrefixMax below(nl), above(nl);
  std::vector<std::size_t> length(m, 0);   // indexed by sorted position
  std::vector<std::size_t> next(m, m);
  std::size_t inserted = 0;
  for (std::size_t pos = 0; pos < m; ++pos) {
    const std::size_t a = order[pos];
    while (inserted < pos && dist[order[inserted]] < beta * dist[a]) {
      const std::size_t b = order[inserted];
      const std::size_t rk = rank_of(values[b]);
      below.update(rk, {length[inserted], inserted});
      above.update(nl - 1 - rk, {length[inserted], inserted});
      ++inserted;
    }
    const double ua = values[a];
    // Successors b need |u_b - u_a| >= epsilon, split by the sign of the step.
    const auto lo_count = static_cast<std::size_t>(
        std::partition_point(levels.begin(), levels.end(), [&](double ub) { return std::abs(ub - ua) >= epsilon && ub < ua; }) -
        levels.begin());
    const auto hi_first = static_cast<std::size_t>(
        std::partition_point(levels.begin(), levels.end(), [&](double ub) { return !(std::abs(ub - ua) >= epsilon && ub > ua); }) -
        levels.begin());
    Best best = below.query(lo_count);
    const Best up = above.query(nl - hi_first);
    if (up.better_than(best)) best = up;
    length[pos] = best.length + 1;
    if (best.length > 0) next[pos] = best.pos;
  }

  std::size_t start = 0;
  for (std::size_t pos = 1; pos < m; ++pos) {
    if (length[pos] > length[start]) start = pos;
  }
  if (length[start] < 2) return out;
  out.count = length[start];
  for (std::size_t pos = start; pos < m; pos = next[pos]) out.chain.push_back(points[order[pos]]);
  return out;
}

CountingResult counting_function(const ScalarField& field, const LipschitzGraph& graph, const Vec& vertex_x,
                                 const CountingParams& params, int depth) {
  params.validate();
  const ConeSpec cone{params.alpha, 0.0, params.r};
  const auto pts = cone_samples(graph, vertex_x, cone, depth);
  std::vector<double> vals(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = field.u(pts[i]);
  Vec vertex(graph.dim() + 1);
  for (int a = 0; a < graph.dim(); ++a) vertex[a] = vertex_x[a];
  vertex[graph.dim()] = graph(vertex_x);
  return longest_chain(pts, vals, vertex, params.epsilon, params.beta);
}

}  // namespace ealab
