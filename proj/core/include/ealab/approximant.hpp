#pragma once

// Stopping-time construction of the epsilon-approximant: the dyadic forest of
// curved cubes, R-regions, red/blue translated boxes, phi_1 and the hybrid
// approximant, plus the quantitative checks run on top of it.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ealab/fields.hpp"
#include "ealab/geometry.hpp"
#include "ealab/grid.hpp"
#include "ealab/operators.hpp"

namespace ealab {

struct ForestOptions {
  double epsilon = 0.1;
  double k_blue = 0.5;
  int max_depth = 8;
  int grid_depth = 10;  // 2^grid_depth cells per adapted axis; >= max_depth + 2

  void validate() const;
};

enum class Color : std::uint8_t { unset, blue, red };

struct ForestNode {
  int m = 0;
  std::array<std::int64_t, kMaxBoundaryDim> j{};
  bool in_g = false;       // root or selected
  bool selected = false;   // joined some G_{k+1} through the stopping condition
  int generation = -1;     // k with node in G_k, -1 outside G
  std::int64_t governor = -1;  // nearest strict ancestor in G
  double center_value = 0.0;   // u(x_Q^)
  double upper_value = 0.0;    // u(x^l_Q^)
  bool unresolved = false;     // leaf whose children would still be selected
  Color color = Color::unset;  // colour of T(Q^)
  double t_osc = 0.0;          // sampled osc of u over T(Q^)
  double t_err = 0.0;          // sampling error bound for t_osc
  double t_grad = 0.0;         // int_T |grad u|
};

class StoppingForest {
 public:
  const RootCube& root() const { return root_; }
  const ForestOptions& options() const { return opts_; }
  const AdaptedGrid& grid() const { return grid_; }
  int dim() const { return n_; }
  double lipschitz() const { return L_; }

  const std::vector<ForestNode>& nodes() const { return nodes_; }
  std::vector<ForestNode>& nodes() { return nodes_; }
  const ForestNode& node(std::int64_t id) const { return nodes_[static_cast<std::size_t>(id)]; }

  std::int64_t level_offset(int m) const;
  std::int64_t level_size(int m) const;
  std::int64_t id_of(int m, const std::array<std::int64_t, kMaxBoundaryDim>& j) const;
  std::int64_t parent(std::int64_t id) const;
  std::vector<std::int64_t> children(std::int64_t id) const;
  CurvedCube cube(std::int64_t id) const;
  double side(std::int64_t id) const;

  // All G nodes in (m, j) order.
  std::vector<std::int64_t> g_nodes() const;
  // G_1(node): selected nodes governed by `id`.
  std::vector<std::int64_t> g_children(std::int64_t id) const;
  std::size_t selected_count() const;
  std::vector<std::size_t> selected_per_generation() const;

  // Cell samples in adapted grid order.
  const std::vector<double>& cell_u() const { return cell_u_; }
  const std::vector<double>& cell_grad() const { return cell_grad_; }
  // Owning G node of each cell (R-region membership).
  const std::vector<std::int64_t>& cell_owner() const { return cell_owner_; }
  std::size_t unresolved_cells() const { return unresolved_cells_; }
  double unresolved_fraction() const;
  std::size_t unresolved_leaves() const;

  // Cell index ranges [lo, hi) of the curved cube and of T(Q^).
  std::pair<CellIndex, CellIndex> cube_cells(std::int64_t id) const;
  std::pair<CellIndex, CellIndex> translated_cells(std::int64_t id) const;

  // Union of red T boxes over all dyadic levels the grid resolves (0 ..
  // grid_depth - 1), not only the forest's; empty before red_blue_classify.
  const std::vector<std::uint8_t>& red_mask() const { return red_mask_; }
  // Per leaf id: sums of int_T |grad u| and l^n over red cubes strictly below
  // the leaf, zero elsewhere.
  const std::vector<double>& below_red_grad() const { return below_red_grad_; }
  const std::vector<double>& below_red_size() const { return below_red_size_; }

 private:
  friend StoppingForest build_forest(const ScalarField&, const LipschitzGraph&, const RootCube&, const ForestOptions&);
  friend void red_blue_classify(StoppingForest&);

  RootCube root_;
  ForestOptions opts_;
  AdaptedGrid grid_;
  int n_ = 1;
  double L_ = 0.0;
  std::vector<ForestNode> nodes_;
  std::vector<double> cell_u_;
  std::vector<double> cell_grad_;
  std::vector<std::int64_t> cell_owner_;
  std::size_t unresolved_cells_ = 0;
  std::vector<std::uint8_t> red_mask_;
  std::vector<double> below_red_grad_;
  std::vector<double> below_red_size_;
};

// Stopping-time selection: a node joins G iff |u(x_ref) - u(x^l_node)| > eps,
// ref being its nearest G ancestor. Also samples u on the grid and assigns
// every cell to its R-region.
StoppingForest build_forest(const ScalarField& field, const LipschitzGraph& graph, const RootCube& root,
                            const ForestOptions& opts);

// Tags T(Q^) of every dyadic cube from the forest's cell samples: blue iff
// osc + error bound <= k eps, red otherwise (the ambiguous band included).
// Cubes finer than the forest are tagged too, so Red does not depend on
// max_depth.
void red_blue_classify(StoppingForest& forest);

struct Phi1 {
  std::vector<double> values;  // per cell
  std::size_t unresolved_cells = 0;
};

Phi1 build_phi1(const StoppingForest& forest);

class ConstructionError : public std::runtime_error {
 public:
  ConstructionError(const std::string& what, DomainPoint witness)
      : std::runtime_error(what), witness_(std::move(witness)) {}
  const DomainPoint& witness() const { return witness_; }

 private:
  DomainPoint witness_;
};

struct ApproximantField {
  AdaptedGrid grid;
  std::vector<double> phi1;
  std::vector<std::uint8_t> red;  // cell lies in some red T box
  std::vector<double> values;     // approximant at cell centres
  CellMeasure jump;               // J: jumps across the boundary of Red
  double sup_error = 0.0;
  DomainPoint witness;
  double grid_term = 0.0;  // oscillation over unresolved bottom layers plus sampling error
  double bound = 0.0;      // (k + 1) eps + grid_term
  std::size_t red_cells = 0;
  std::size_t unresolved_cells = 0;
  double unresolved_fraction = 0.0;

  // Approximant at an arbitrary point of the root curved cube.
  double evaluate(const ScalarField& field, const LipschitzGraph& graph, const DomainPoint& p) const;
  bool contains(const LipschitzGraph& graph, const DomainPoint& p) const;
};

// Requires colours. Throws ConstructionError when the sampled error exceeds
// the bound, which means a bug or too coarse a grid.
ApproximantField build_approximant(const StoppingForest& forest, const ScalarField& field,
                                   const LipschitzGraph& graph);

struct CarlesonOptions {
  int boundary_samples = 257;  // per axis, grid nodes
  int radius_levels = -1;      // default: max_depth + 1
};

struct CarlesonDecomposition {
  CellMeasure mu1;  // |grad phi_1|: faces of R-regions
  CellMeasure mu2;  // |grad u| on Red
  CellMeasure mu3;  // J
  CarlesonResult c1, c2, c3;
  double car1_max = 0.0;  // eps * sum_red int_T |grad u| / l(Q)^n
  double car2_max = 0.0;  // eps^2 * sum_red l(Q_j)^n / l(Q)^n
  std::int64_t car1_node = 0;
  std::int64_t car2_node = 0;
};

CarlesonDecomposition carleson_decomposition(const ApproximantField& approx, const StoppingForest& forest,
                                             const LipschitzGraph& graph, const CarlesonOptions& opts = {});

struct StoppingSumRow {
  std::int64_t node = 0;
  double s1_lower = 0.0;  // flat face areas
  double s1_upper = 0.0;  // times sqrt(1 + L^2)
  double s2 = 0.0;
  double r1 = 0.0;  // s1_upper eps^2 / l(Q)^n
  double r2 = 0.0;  // s2 eps^2 / l(Q)^n
};

struct StoppingSums {
  std::vector<StoppingSumRow> rows;  // one per G node
  double r1_max = 0.0;
  double r2_max = 0.0;
};

StoppingSums stopping_sums(const StoppingForest& forest);

using AdaptedRegion = std::function<bool(const Vec& x, double h)>;

// Union over G_1(node) of T(Q_j) (red) or the cones over the upper deck of Q_j
// in the shifted domain (blue).
AdaptedRegion rtilde_region(const StoppingForest& forest, const LipschitzGraph& graph, std::int64_t node,
                            double alpha);

struct Lemma22Report {
  double ratio_max = 0.0;  // eps^2 sum l(Q_j)^n / int_{R~} |grad u|^2 (y - phi)
  std::int64_t witness = -1;
  std::size_t nodes = 0;
  bool infinite = false;
};

Lemma22Report lemma22_check(const StoppingForest& forest, const ScalarField& field, const LipschitzGraph& graph,
                            double alpha);

struct Prop24Options {
  int gen_lo = 0;
  int gen_hi = 5;
  int samples_per_cube = 8;  // boundary samples per axis in each cube
  int relative_depth = 6;    // quadrature spacing l(Q) 2^-relative_depth
};

struct Prop24Row {
  int m = 0;
  std::array<std::int64_t, kMaxBoundaryDim> j{};
  double ratio = 0.0;  // int_Q A^2 / l(Q)^n
};

struct Prop24Report {
  std::vector<Prop24Row> rows;
  double max_ratio = 0.0;
  double min_ratio = 0.0;
  double spread = 0.0;  // max / min over positive ratios, 0 if none
};

Prop24Report prop24_check(const ScalarField& field, const LipschitzGraph& graph, const RootCube& root, double alpha,
                          const Prop24Options& opts = {});

struct GlobalExtension {
  std::vector<RootCube> cubes;  // Q_1 .. Q_K, side 2^k
  std::vector<ApproximantField> parts;
  std::vector<double> part_errors;
  double sup_error = 0.0;  // over cells, each served by exactly one part

  // Index of the part serving p: smallest k with p in Q^_k, or -1.
  int serving_part(const LipschitzGraph& graph, const DomainPoint& p) const;
  double evaluate(const ScalarField& field, const LipschitzGraph& graph, const DomainPoint& p) const;
};

GlobalExtension global_extension(const ScalarField& field, const LipschitzGraph& graph, const Vec& x0, int K,
                                 const ForestOptions& opts);

// Forest dump: {"epsilon", "k_blue", "max_depth", "root", "nodes": [[m, [j], k, selected, color, value], ...]}.
std::string forest_to_json(const StoppingForest& forest);
// Approximant values on the adapted grid (n = 1), "coordinates": "adapted".
GridData approximant_grid(const ApproximantField& approx);

}  // namespace ealab
