#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ealab/geometry.hpp"
#include "ealab/vec.hpp"

namespace ealab {

// Scalar field on Omega with gradient (n + 1 entries, x first, y last) and
// Laplacian evaluators.
struct ScalarField {
  using Eval = std::function<double(const DomainPoint&)>;
  using GradEval = std::function<Vec(const DomainPoint&)>;

  int n = 1;
  std::string name;
  Eval u;
  GradEval grad;
  Eval laplacian;
  std::optional<double> sup_norm_hint;
  bool analytic = true;

  double operator()(const DomainPoint& p) const { return u(p); }
};

struct FieldParams {
  double c = 1.0;      // constant
  double alpha = 0.5;  // power_alpha exponent
  std::string file;    // custom grid file
  bool clip = false;   // clamp u to [-1, 1]
};

// Names: constant, coordinate_y, harmonic_sinexp, paraboloid, power_alpha,
// custom. Throws std::invalid_argument on unknown names.
ScalarField builtin_field(const std::string& name, int n, const FieldParams& params = {});
const std::vector<std::string>& builtin_field_names();

// Replaces grad and laplacian by central differences of u with step `step`.
ScalarField with_finite_differences(ScalarField field, double step);
// u -> clamp(u, lo, hi); derivatives vanish where the clamp is active.
ScalarField clipped(ScalarField field, double lo = -1.0, double hi = 1.0);
// u -> scale * u + shift.
ScalarField affine(ScalarField field, double scale, double shift);

Vec fd_gradient(const ScalarField::Eval& f, const DomainPoint& p, int n, double step);
double fd_laplacian(const ScalarField::Eval& f, const DomainPoint& p, int n, double step);

// Sampled field data on a tensor grid over (x, y), x fastest: value(ix, iy) =
// values[iy * nx + ix]. Used for custom fields and approximant export.
struct GridData {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  double dx = 1.0;
  double dy = 1.0;
  std::vector<double> values;
  // "cartesian" or "adapted"; only written when not cartesian.
  std::string coordinates = "cartesian";
};

// CSV with header x,y,u, or little-endian f64 binary with a JSON sidecar
// {nx, ny, x0, y0, dx, dy} next to it (same stem, .json).
GridData load_grid_data(const std::string& path);
void save_grid_data(const std::string& path, const GridData& grid);
// Bilinear interpolation of the samples plus nodal central differences.
ScalarField grid_field(GridData grid, std::string name = "custom");

struct SampleSet {
  std::vector<DomainPoint> points;
  // Largest distance from a point of the sampled region to its nearest sample.
  double coverage_radius = 0.0;
};

// Cell-centred samples of an adapted box, `per_axis` along each axis.
SampleSet sample_box(const LipschitzGraph& graph, const AdaptedBox& box, int per_axis);
// Cartesian cell centres inside the closed ball plus their radial projections
// onto the sphere, so extremes of monotone fields are hit.
SampleSet sample_ball(const DomainPoint& center, double radius, int per_axis);

struct Oscillation {
  double value = 0.0;
  double error_bound = 0.0;  // 2 * max|grad u| * coverage radius
  std::size_t samples = 0;
  DomainPoint argmin;
  DomainPoint argmax;
};

// Sampled max - min of u over the samples accepted by `region`.
// Throws std::invalid_argument when no sample lies in the region.
Oscillation oscillation(const ScalarField& field, const std::function<bool(const DomainPoint&)>& region,
                        const SampleSet& samples);
Oscillation oscillation(const ScalarField& field, const SampleSet& samples);

struct Ball {
  DomainPoint center;
  double radius = 0.0;
};

// Ball centres at the adapted cell centres of root x (0, side], radius
// h / (2 (1 + eta) sqrt(1 + L^2)) so that 2 B_r lies in Omega.
std::vector<Ball> default_balls(const LipschitzGraph& graph, const RootCube& root, double eta, int per_axis);

// Midpoint quadrature of f over a ball on a `cells` ^ (n+1) Cartesian grid,
// boundary cells resolved by 4x supersampling per axis.
double ball_integral(const std::function<double(const DomainPoint&)>& f, const Ball& ball, int cells = 16);

struct SharpReport {
  double theta_sup = 0.0;
  bool holds = true;
  std::size_t hard_failures = 0;
  std::optional<DomainPoint> witness;
};

// |u lap u| <= theta |grad u|^2 over the samples.
SharpReport check_sharp(const ScalarField& field, const SampleSet& samples, double theta);

struct BallRatioReport {
  double ratio_sup = 0.0;
  bool holds = true;
  bool infinite = false;
  std::size_t balls = 0;
  std::optional<Ball> witness;
};

struct BallOptions {
  double eta = 0.0;
  int samples_per_axis = 12;
  int quadrature_cells = 16;
};

// osc_B u / (r^{1-n} int_{(1+eta)B} (|grad u|^2 + |u lap u|))^{1/2}; holds iff
// the sup is <= C. Throws std::domain_error if some ball violates 2B in Omega.
BallRatioReport check_star(const ScalarField& field, const LipschitzGraph& graph, const std::vector<Ball>& balls,
                           double C, const BallOptions& opts = {});
// (osc_B u)^2 / (r^{1-n} int_{(1+eta)B} |grad u|^2).
BallRatioReport morrey_ratio(const ScalarField& field, const LipschitzGraph& graph, const std::vector<Ball>& balls,
                             const BallOptions& opts = {});

struct ClassifyOptions {
  double theta = 0.5;          // for the (#) flag
  double gradient_alpha = 1.0; // exponent in lap |grad u|^alpha >= 0
  double power_alpha = 0.5;    // exponent in lap u^alpha <= 0
  double fd_step = 1e-3;
  double tolerance = 1e-9;     // relative slack for analytic sign checks
  double fd_tolerance = 1e-4;  // relative slack for finite-difference sign checks
  double star_C = 10.0;
  BallOptions balls;
};

struct ClassReport {
  std::size_t samples = 0;
  SharpReport sharp;
  std::optional<BallRatioReport> star;
  std::optional<BallRatioReport> morrey;
  bool prop31 = false;         // u >= 0 and lap u >= 0
  bool prop32 = false;         // lap |grad u|^alpha >= 0
  bool prop33_log = false;     // lap ln u <= 0
  bool prop33_inverse = false; // lap u^{-1} >= 0
  bool prop33_power = false;   // lap u^alpha <= 0
  double implied_theta = 0.0;  // 1 - alpha when prop33_power holds
  std::size_t nonpositive_samples = 0;

  double theta_sup() const { return sharp.theta_sup; }
};

// Evaluates every class condition on `samples`; ball conditions only when
// `balls` is non-empty.
ClassReport classify(const ScalarField& field, const LipschitzGraph& graph, const SampleSet& samples,
                     const std::vector<Ball>& balls = {}, const ClassifyOptions& opts = {});

}  // namespace ealab
