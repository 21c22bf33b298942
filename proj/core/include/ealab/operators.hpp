#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ealab/fields.hpp"
#include "ealab/geometry.hpp"
#include "ealab/grid.hpp"

namespace ealab {

// ---- total variation -------------------------------------------------------

// Piecewise-constant field, one value per grid cell: face weights only,
// |jump| * face area (horizontal faces carry the graph area element).
CellMeasure total_variation_piecewise(const AdaptedGrid& grid, const LipschitzGraph& graph,
                                      std::span<const double> cell_values);

// Continuous field sampled at cell centres: volume weights |grad| * volume from
// one-sided differences in adapted coordinates mapped back to Cartesian ones.
CellMeasure total_variation_smooth(const AdaptedGrid& grid, const LipschitzGraph& graph,
                                   std::span<const double> cell_values);

// Area of the face between cell c and its +axis neighbour, in Cartesian
// measure (horizontal faces follow the graph).
double face_area_cartesian(const AdaptedGrid& grid, const LipschitzGraph& graph, std::int64_t cell, int axis);

// ---- cone functionals -------------------------------------------------------

struct QuadratureOptions {
  int depth = 9;       // grid spacing 2^-depth in every adapted axis
  int supersample = 4; // per-axis subsamples on cells cut by the cone boundary
};

struct AreaFunctionResult {
  double value = 0.0;        // A at the requested depth
  double coarse_value = 0.0; // A at depth - 1
  double error_estimate = 0.0;
  bool divergence_flag = false;
};

// (int_{Gamma_{alpha,s,t}(x)} |grad u|^2 (y - phi(x))^{1-n})^{1/2} by midpoint
// quadrature in adapted coordinates.
AreaFunctionResult area_function(const ScalarField& field, const LipschitzGraph& graph, const Vec& vertex_x,
                                 const ConeSpec& cone, const QuadratureOptions& opts = {});

struct NontangentialResult {
  double value = 0.0;
  double coarse_value = 0.0;
  std::optional<DomainPoint> witness;
};

NontangentialResult nontangential_max(const ScalarField& field, const LipschitzGraph& graph, const Vec& vertex_x,
                                      const ConeSpec& cone, int depth = 9);

// Cell-centre samples of the truncated cone at spacing 2^-depth.
std::vector<DomainPoint> cone_samples(const LipschitzGraph& graph, const Vec& vertex_x, const ConeSpec& cone,
                                      int depth);

// ---- counting function ------------------------------------------------------

struct CountingParams {
  double r = 1.0;
  double epsilon = 0.1;
  double beta = 0.5;
  double alpha = 1.0;

  // Throws std::invalid_argument naming the offending parameter.
  void validate() const;
};

struct CountingResult {
  std::size_t count = 0;           // points in the longest admissible chain, 0 without any step
  std::vector<DomainPoint> chain;  // witness chain, farthest point first
  std::size_t samples = 0;
};

// Longest chain x_1, ..., x_k of cone samples with |x_m - X| < beta |x_{m-1} - X|
// and |u(x_m) - u(x_{m-1})| >= epsilon, X = (x, phi(x)).
CountingResult counting_function(const ScalarField& field, const LipschitzGraph& graph, const Vec& vertex_x,
                                 const CountingParams& params, int depth = 9);

// Same search on explicit points and values, exposed for oracles.
CountingResult longest_chain(std::span<const DomainPoint> points, std::span<const double> values,
                             const Vec& vertex_ambient, double epsilon, double beta);

// ---- Carleson constants -----------------------------------------------------

struct CarlesonResult {
  double constant = 0.0;
  Vec witness_x;
  double witness_r = 0.0;
  double witness_mass = 0.0;
};

// max over (x, r) of mu(Omega cap B((x, phi(x)), r)) / r^n.
CarlesonResult carleson_constant(const CellMeasure& measure, const LipschitzGraph& graph,
                                 std::span<const double> radii, std::span<const Vec> boundary_samples);

// mu(open ball) for one ball, exposed for tests.
double measure_in_ball(const CellMeasure& measure, const LipschitzGraph& graph, const Vec& center, double radius);

// {scale, scale/2, ..., scale/2^(levels-1)}.
std::vector<double> dyadic_radii(double scale, int levels);
// Boundary grid nodes of the measure's grid taken every `stride` nodes.
std::vector<Vec> boundary_node_samples(const AdaptedGrid& grid, int stride);

// ---- quantitative Fatou average -------------------------------------------

struct FatouOptions {
  int depth = 8;              // cone sampling depth for N
  int boundary_samples = 64;  // per axis over the window
  int omega_samples = 9;      // per axis over the window
};

struct FatouRow {
  Vec omega;
  double r = 0.0;
  double average = 0.0;
};

struct FatouResult {
  double sup = 0.0;
  Vec witness_omega;
  double witness_r = 0.0;
  std::vector<FatouRow> rows;
};

// sup over omega and r of r^{-n} int_{boundary cap B(omega, r)} N(r, eps, beta) dsigma,
// boundary integral by area-element weighted midpoint samples over `window`.
// Requires field.sup_norm_hint <= 1.
FatouResult fatou_average(const ScalarField& field, const LipschitzGraph& graph, const CountingParams& params,
                          const RootCube& window, std::span<const double> radii, const FatouOptions& opts = {});

}  // namespace ealab
