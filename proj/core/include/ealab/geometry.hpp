#pragma once

// Lipschitz-graph domains Omega = {(x, y) : y > phi(x)}, cones with vertex on
// the graph, curved dyadic cubes and the derived regions used by the
// stopping-time construction.
//
// Everything here is pure: graphs are immutable after construction and the
// free functions have no side effects, so values can be shared across threads.

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ealab/vec.hpp"

namespace ealab {

// Boundary function phi : R^n -> R with a declared Lipschitz constant.
class LipschitzGraph {
 public:
  using Eval = std::function<double(const Vec&)>;
  using GradEval = std::function<Vec(const Vec&)>;

  LipschitzGraph(int n, Eval phi, double lipschitz_L, GradEval grad = {}, std::string kind = "custom");

  static LipschitzGraph flat(int n);
  // phi(x) = <slope, x> + offset.
  static LipschitzGraph linear(const Vec& slope, double offset = 0.0);
  // phi(x) = |x| (Euclidean norm), L = 1.
  static LipschitzGraph abs_cone(int n);
  // Multilinear interpolation of samples on a tensor grid. `axes[a]` holds the
  // strictly increasing sample coordinates along boundary axis a; `values` is
  // laid out with the last axis fastest. L is the largest cell slope norm.
  // Outside the sampled box phi is extended by clamping the argument.
  static LipschitzGraph from_samples(std::vector<std::vector<double>> axes, std::vector<double> values);
  // Boundary CSV with header x_1..x_n,phi. Rows must cover a tensor grid.
  static LipschitzGraph from_csv(const std::string& path);

  int dim() const { return n_; }
  double lipschitz() const { return L_; }
  const std::string& kind() const { return kind_; }
  bool is_flat() const { return kind_ == "flat"; }

  double operator()(const Vec& x) const { return phi_(x); }
  // Analytic gradient when supplied, central differences otherwise.
  Vec gradient(const Vec& x) const;
  // Graph area element sqrt(1 + |grad phi|^2).
  double area_element(const Vec& x) const;

 private:
  int n_;
  Eval phi_;
  GradEval grad_;
  double L_;
  std::string kind_;
};

struct DomainPoint {
  Vec x;     // n boundary coordinates
  double y;  // vertical coordinate

  // h = y - phi(x); the point lies in Omega iff h > 0.
  double height(const LipschitzGraph& graph) const { return y - graph(x); }
  bool in_domain(const LipschitzGraph& graph) const { return height(graph) > 0.0; }
  // Packs (x, y) into one (n+1)-vector.
  Vec ambient() const;
  static DomainPoint from_ambient(const Vec& z);
  static DomainPoint from_adapted(const LipschitzGraph& graph, const Vec& x, double h) {
    return {x, graph(x) + h};
  }
};

double distance(const DomainPoint& a, const DomainPoint& b);

// Truncated cone Gamma_{alpha,s,t}: aperture alpha, heights s < y - phi(z) < t.
struct ConeSpec {
  double alpha = 1.0;
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();

  void validate() const;
  // Cones with vertex on the graph stay inside Omega only for alpha < 1/L.
  void validate_for(const LipschitzGraph& graph) const;
};

// Base cube in R^n that plays the role of Q_0.
struct RootCube {
  Vec origin;
  double side = 1.0;

  static RootCube unit(int n) { return {Vec(n, 0.0), 1.0}; }
  // Cube of the given side centred at `center`.
  static RootCube centered(const Vec& center, double side);
};

// Dyadic cube of generation m with integer index j (0 <= j_a < 2^m) below
// `root`; names the curved cube Q^ = {(x, y) : x in Q, phi(x) <= y <= phi(x) + l(Q)}.
struct CurvedCube {
  int m = 0;
  std::array<std::int64_t, kMaxBoundaryDim> j{};
  RootCube root;

  static CurvedCube root_cube(const RootCube& root) { return {0, {}, root}; }

  int dim() const { return root.origin.size(); }
  double side() const;
  Vec lower_corner() const;
  Vec center() const;  // x_Q
  bool contains_x(const Vec& x) const;
  CurvedCube parent() const;
  bool operator==(const CurvedCube& other) const;
};

// Centre x_Q^, associated centre x^l (shifted up by l(Q)) and the half-shift
// point x^{l/2} (centre of T(Q^)).
struct CubeCenters {
  DomainPoint center;
  DomainPoint upper;
  DomainPoint half;
};

// Box {x in [lo, hi], h_lo <= y - phi(x) <= h_hi} in graph-adapted coordinates.
struct AdaptedBox {
  Vec lo;
  Vec hi;
  double h_lo = 0.0;
  double h_hi = 0.0;

  bool contains(const LipschitzGraph& graph, const DomainPoint& p) const;
  bool contains_adapted(const Vec& x, double h) const;
  double volume() const;
};

struct ShadowBall {
  DomainPoint center;         // z
  double boundary_distance;   // d(z, boundary)
  double radius;              // (1 + alpha) d(z, boundary)
  DomainPoint nearest;        // closest sampled boundary point

  // True iff the boundary point above `omega` lies in the open ball.
  bool contains_boundary_point(const LipschitzGraph& graph, const Vec& omega) const;
};

struct BallBoxReport {
  bool inner_ok = true;            // B(x_Q^, l(Q)) inside Q^ at the sampled points
  bool inner_ok_corrected = true;  // same with radius l(Q) / (2 (1 + L))
  bool outer_ok = true;            // Q^ inside B(x_Q^, C(n, L) l(Q))
  double outer_constant = 0.0;     // C(n, L) = sqrt(n + 1 + L^2)
  double max_outer_distance = 0.0; // largest sampled |p - x_Q^| / l(Q)
  std::optional<DomainPoint> inner_witness;
  std::optional<DomainPoint> outer_witness;

  bool ok() const { return inner_ok_corrected && outer_ok; }
};

bool cone_membership(const LipschitzGraph& graph, const Vec& vertex_x, const ConeSpec& cone,
                     const DomainPoint& p);

bool cube_membership(const LipschitzGraph& graph, const CurvedCube& cube, const DomainPoint& p);

CubeCenters centers(const LipschitzGraph& graph, const CurvedCube& cube);

// T(Q^): Q^ translated up by l(Q)/2; for the root cube its upper half.
AdaptedBox translated_box(const CurvedCube& cube);
AdaptedBox curved_box(const CurvedCube& cube);

// d(z, boundary) by grid minimisation of |z - (x, phi(x))| over x within the
// bracketing window |x - z_x| <= h, followed by local pattern refinement.
double boundary_distance(const LipschitzGraph& graph, const DomainPoint& z, int samples_per_axis = 64);

ShadowBall shadow(const LipschitzGraph& graph, const DomainPoint& z, double alpha, int samples_per_axis = 64);

BallBoxReport ball_box_check(const LipschitzGraph& graph, const CurvedCube& cube, int samples_per_axis = 48);

std::vector<CurvedCube> dyadic_children(const CurvedCube& cube);

}  // namespace ealab
