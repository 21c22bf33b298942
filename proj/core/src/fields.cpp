#include "ealab/fields.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ealab/parallel.hpp"

namespace ealab {

namespace {

constexpr double kPi = std::numbers::pi;

DomainPoint shifted(const DomainPoint& p, int axis, double step) {
  DomainPoint q = p;
  if (axis < p.x.size()) {
    q.x[axis] += step;
  } else {
    q.y += step;
  }
  return q;
}

// Walks every multi-index of a cube grid with `cells` entries per axis.
template <typename Body>
void for_each_cell(int axes, int cells, Body&& body) {
  std::array<int, kMaxAmbientDim> idx{};
  long total = 1;
  for (int a = 0; a < axes; ++a) total *= cells;
  for (long flat = 0; flat < total; ++flat) {
    long rest = flat;
    for (int a = axes - 1; a >= 0; --a) {
      idx[static_cast<std::size_t>(a)] = static_cast<int>(rest % cells);
      rest /= cells;
    }
    body(idx);
  }
}

}  // namespace

Vec fd_gradient(const ScalarField::Eval& f, const DomainPoint& p, int n, double step) {
  Vec g(n + 1);
  for (int a = 0; a <= n; ++a) g[a] = (f(shifted(p, a, step)) - f(shifted(p, a, -step))) / (2.0 * step);
  return g;
}

double fd_laplacian(const ScalarField::Eval& f, const DomainPoint& p, int n, double step) {
  const double centre = f(p);
  double lap = 0.0;
  for (int a = 0; a <= n; ++a) {
    lap += f(shifted(p, a, step)) - 2.0 * centre + f(shifted(p, a, -step));
  }
  return lap / (step * step);
}

const std::vector<std::string>& builtin_field_names() {
  static const std::vector<std::string> names{"constant",   "coordinate_y", "harmonic_sinexp",
                                              "paraboloid", "power_alpha",  "custom"};
  return names;
}

ScalarField builtin_field(const std::string& name, int n, const FieldParams& params) {
  if (n < 1 || n > kMaxBoundaryDim) throw std::invalid_argument("field dimension n must be in [1, 3]");
  ScalarField f;
  f.n = n;
  f.name = name;
  if (name == "constant") {
    const double c = params.c;
    f.u = [c](const DomainPoint&) { return c; };
    f.grad = [n](const DomainPoint&) { return Vec(n + 1); };
    f.laplacian = [](const DomainPoint&) { return 0.0; };
    f.sup_norm_hint = std::abs(c);
  } else if (name == "coordinate_y") {
    f.u = [](const DomainPoint& p) { return p.y; };
    f.grad = [n](const DomainPoint&) {
      Vec g(n + 1);
      g[n] = 1.0;
      return g;
    };
    f.laplacian = [](const DomainPoint&) { return 0.0; };
  } else if (name == "harmonic_sinexp") {
    f.u = [](const DomainPoint& p) { return std::sin(kPi * p.x[0]) * std::exp(-kPi * p.y); };
    f.grad = [n](const DomainPoint& p) {
      Vec g(n + 1);
      const double e = std::exp(-kPi * p.y);
      g[0] = kPi * std::cos(kPi * p.x[0]) * e;
      g[n] = -kPi * std::sin(kPi * p.x[0]) * e;
      return g;
    };
    // Exactly harmonic: the x and y second derivatives cancel identically.
    f.laplacian = [](const DomainPoint&) { return 0.0; };
    f.sup_norm_hint = 1.0;
  } else if (name == "paraboloid") {
    f.u = [](const DomainPoint& p) { return p.x.norm_squared() + p.y * p.y; };
    f.grad = [n](const DomainPoint& p) {
      Vec g(n + 1);
      for (int a = 0; a < n; ++a) g[a] = 2.0 * p.x[a];
      g[n] = 2.0 * p.y;
      return g;
    };
    f.laplacian = [n](const DomainPoint&) { return 2.0 * (n + 1); };
  } else if (name == "power_alpha") {
    const double al = params.alpha;
    if (!(al > 0.0)) throw std::invalid_argument("power_alpha: alpha must be > 0");
    f.u = [al](const DomainPoint& p) { return std::pow(p.y, al); };
    f.grad = [n, al](const DomainPoint& p) {
      Vec g(n + 1);
      g[n] = al * std::pow(p.y, al - 1.0);
      return g;
    };
    f.laplacian = [al](const DomainPoint& p) { return al * (al - 1.0) * std::pow(p.y, al - 2.0); };
  } else if (name == "custom") {
    if (params.file.empty()) throw std::invalid_argument("custom field requires a grid file");
    if (n != 1) throw std::invalid_argument("custom grid fields are two-dimensional (n = 1)");
    f = grid_field(load_grid_data(params.file), "custom");
  } else {
    throw std::invalid_argument("unknown field '" + name + "'");
  }
  if (params.clip) f = clipped(std::move(f));
  return f;
}

ScalarField with_finite_differences(ScalarField field, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite-difference step must be > 0");
  auto u = field.u;
  const int n = field.n;
  field.grad = [u, n, step](const DomainPoint& p) { return fd_gradient(u, p, n, step); };
  field.laplacian = [u, n, step](const DomainPoint& p) { return fd_laplacian(u, p, n, step); };
  field.analytic = false;
  return field;
}

ScalarField clipped(ScalarField field, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("clip bounds must satisfy lo < hi");
  auto u = field.u;
  auto grad = field.grad;
  auto lap = field.laplacian;
  const int n = field.n;
  field.u = [u, lo, hi](const DomainPoint& p) { return std::clamp(u(p), lo, hi); };
  field.grad = [u, grad, lo, hi, n](const DomainPoint& p) {
    const double v = u(p);
    return (v <= lo || v >= hi) ? Vec(n + 1) : grad(p);
  };
  field.laplacian = [u, lap, lo, hi](const DomainPoint& p) {
    const double v = u(p);
    return (v <= lo || v >= hi) ? 0.0 : lap(p);
  };
  const double bound = std::max(std::abs(lo), std::abs(hi));
  field.sup_norm_hint = field.sup_norm_hint ? std::min(*field.sup_norm_hint, bound) : bound;
  field.name += "_clipped";
  return field;
}

ScalarField affine(ScalarField field, double scale, double shift) {
  auto u = field.u;
  auto grad = field.grad;
  auto lap = field.laplacian;
  field.u = [u, scale, shift](const DomainPoint& p) { return scale * u(p) + shift; };
  field.grad = [grad, scale](const DomainPoint& p) { return grad(p) * scale; };
  field.laplacian = [lap, scale](const DomainPoint& p) { return scale * lap(p); };
  if (field.sup_norm_hint) field.sup_norm_hint = std::abs(scale) * *field.sup_norm_hint + std::abs(shift);
  return field;
}

SampleSet sample_box(const LipschitzGraph& graph, const AdaptedBox& box, int per_axis) {
  if (per_axis < 1) throw std::invalid_argument("sample_box: per_axis must be >= 1");
  const int n = box.lo.size();
  SampleSet out;
  double diag2 = 0.0;
  for (int a = 0; a < n; ++a) {
    const double d = (box.hi[a] - box.lo[a]) / per_axis;
    diag2 += d * d;
  }
  const double dh = (box.h_hi - box.h_lo) / per_axis;
  diag2 += dh * dh;
  out.coverage_radius = 0.5 * std::sqrt(diag2) * (1.0 + graph.lipschitz());
  out.points.reserve(static_cast<std::size_t>(std::pow(per_axis, n + 1)));
  for_each_cell(n + 1, per_axis, [&](const std::array<int, kMaxAmbientDim>& idx) {
    Vec x(n);
    for (int a = 0; a < n; ++a) {
      x[a] = box.lo[a] + (idx[static_cast<std::size_t>(a)] + 0.5) * (box.hi[a] - box.lo[a]) / per_axis;
    }
    const double h = box.h_lo + (idx[static_cast<std::size_t>(n)] + 0.5) * dh;
    out.points.push_back(DomainPoint::from_adapted(graph, x, h));
  });
  return out;
}

SampleSet sample_ball(const DomainPoint& center, double radius, int per_axis) {
  if (per_axis < 1 || !(radius > 0.0)) throw std::invalid_argument("sample_ball: bad radius or resolution");
  const Vec c = center.ambient();
  const int axes = c.size();
  const double step = 2.0 * radius / per_axis;
  SampleSet out;
  out.coverage_radius = 0.5 * step * std::sqrt(static_cast<double>(axes));
  for_each_cell(axes, per_axis, [&](const std::array<int, kMaxAmbientDim>& idx) {
    Vec p(axes);
    double near2 = 0.0;
    double far2 = 0.0;
    for (int a = 0; a < axes; ++a) {
      const double lo = c[a] - radius + idx[static_cast<std::size_t>(a)] * step;
      p[a] = lo + 0.5 * step;
      const double dlo = lo - c[a];
      const double dhi = lo + step - c[a];
      far2 += std::max(dlo * dlo, dhi * dhi);
      if (dlo > 0.0) near2 += dlo * dlo;
      else if (dhi < 0.0) near2 += dhi * dhi;
    }
    const double r2 = radius * radius;
    const Vec offset = p - c;
    const double d = offset.norm();
    if (d <= radius) out.points.push_back(DomainPoint::from_ambient(p));
    if (near2 < r2 && far2 > r2 && d > 0.0) out.points.push_back(DomainPoint::from_ambient(c + offset * (radius / d)));
  });
  return out;
}

Oscillation oscillation(const ScalarField& field, const std::function<bool(const DomainPoint&)>& region,
                        const SampleSet& samples) {
  Oscillation out;
  double lo = 0.0;
  double hi = 0.0;
  double grad_max = 0.0;
  for (const auto& p : samples.points) {
    if (region && !region(p)) continue;
    const double v = field.u(p);
    if (out.samples == 0 || v < lo) {
      lo = v;
      out.argmin = p;
    }
    if (out.samples == 0 || v > hi) {
      hi = v;
      out.argmax = p;
    }
    grad_max = std::max(grad_max, field.grad(p).norm());
    ++out.samples;
  }
  if (out.samples == 0) throw std::invalid_argument("oscillation: region contains no samples");
  out.value = hi - lo;
  out.error_bound = 2.0 * grad_max * samples.coverage_radius;
  return out;
}

Oscillation oscillation(const ScalarField& field, const SampleSet& samples) { return oscillation(field, {}, samples); }

std::vector<Ball> default_balls(const LipschitzGraph& graph, const RootCube& root, double eta, int per_axis) {
  if (!(eta >= 0.0 && eta < 1.0)) throw std::invalid_argument("eta must lie in [0, 1)");
  const int n = root.origin.size();
  const double shrink = 2.0 * (1.0 + eta) * std::sqrt(1.0 + graph.lipschitz() * graph.lipschitz());
  std::vector<Ball> balls;
  for_each_cell(n + 1, per_axis, [&](const std::array<int, kMaxAmbientDim>& idx) {
    Vec x(n);
    for (int a = 0; a < n; ++a) x[a] = root.origin[a] + (idx[static_cast<std::size_t>(a)] + 0.5) * root.side / per_axis;
    const double h = (idx[static_cast<std::size_t>(n)] + 0.5) * root.side / per_axis;
    balls.push_back({DomainPoint::from_adapted(graph, x, h), h / shrink});
  });
  return balls;
}

double ball_integral(const std::function<double(const DomainPoint&)>& f, const Ball& ball, int cells) {
  if (cells < 1) throw std::invalid_argument("ball_integral: cells must be >= 1");
  constexpr int kSuper = 4;
  const Vec c = ball.center.ambient();
  const int axes = c.size();
  const double r = ball.radius;
  const double r2 = r * r;
  const double step = 2.0 * r / cells;
  const double vol = std::pow(step, axes);
  const double sub_vol = vol / std::pow(kSuper, axes);
  double total = 0.0;
  for_each_cell(axes, cells, [&](const std::array<int, kMaxAmbientDim>& idx) {
    Vec lo(axes);
    double near2 = 0.0;
    double far2 = 0.0;
    for (int a = 0; a < axes; ++a) {
      lo[a] = c[a] - r + idx[static_cast<std::size_t>(a)] * step;
      const double dlo = lo[a] - c[a];
      const double dhi = lo[a] + step - c[a];
      far2 += std::max(dlo * dlo, dhi * dhi);
      if (dlo > 0.0) near2 += dlo * dlo;
      else if (dhi < 0.0) near2 += dhi * dhi;
    }
    if (near2 >= r2) return;
    if (far2 <= r2) {
      Vec mid = lo;
      for (int a = 0; a < axes; ++a) mid[a] += 0.5 * step;
      total += f(DomainPoint::from_ambient(mid)) * vol;
      return;
    }
    for_each_cell(axes, kSuper, [&](const std::array<int, kMaxAmbientDim>& sub) {
      Vec p = lo;
      for (int a = 0; a < axes; ++a) p[a] += (sub[static_cast<std::size_t>(a)] + 0.5) * step / kSuper;
      if ((p - c).norm_squared() < r2) total += f(DomainPoint::from_ambient(p)) * sub_vol;
    });
  });
  return total;
}

SharpReport check_sharp(const ScalarField& field, const SampleSet& samples, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta must lie in (0, 1)");
  SharpReport out;
  for (const auto& p : samples.points) {
    const double num = std::abs(field.u(p) * field.laplacian(p));
    const double den = field.grad(p).norm_squared();
    double ratio = 0.0;
    if (den == 0.0) {
      if (num > 0.0) {
        ++out.hard_failures;
        if (!out.witness) out.witness = p;
      }
      continue;
    }
    ratio = num / den;
    if (ratio > out.theta_sup) {
      out.theta_sup = ratio;
      if (out.hard_failures == 0) out.witness = p;
    }
  }
  out.holds = out.hard_failures == 0 && out.theta_sup <= theta;
  return out;
}

namespace {

struct BallTerms {
  double osc = 0.0;
  double integral = 0.0;
};

BallRatioReport ball_ratio_sweep(const ScalarField& field, const LipschitzGraph& graph, const std::vector<Ball>& balls,
                                 const BallOptions& opts, bool morrey) {
  if (!(opts.eta >= 0.0 && opts.eta < 1.0)) throw std::invalid_argument("eta must lie in [0, 1)");
  const int n = field.n;
  std::vector<BallTerms> terms(balls.size());
  for (const auto& b : balls) {
    if (!(b.radius > 0.0)) throw std::domain_error("ball radius must be > 0");
    if (boundary_distance(graph, b.center) < 2.0 * b.radius * (1.0 - 1e-12)) {
      throw std::domain_error("sampled ball violates 2B in Omega");
    }
  }
  auto density = [&field, morrey](const DomainPoint& p) {
    const double g2 = field.grad(p).norm_squared();
    return morrey ? g2 : g2 + std::abs(field.u(p) * field.laplacian(p));
  };
  parallel_for(balls.size(), [&](std::size_t i) {
    const Ball& b = balls[i];
    terms[i].osc = oscillation(field, sample_ball(b.center, b.radius, opts.samples_per_axis)).value;
    Ball grown{b.center, (1.0 + opts.eta) * b.radius};
    terms[i].integral = std::pow(b.radius, 1 - n) * ball_integral(density, grown, opts.quadrature_cells);
  });
  BallRatioReport out;
  out.balls = balls.size();
  for (std::size_t i = 0; i < balls.size(); ++i) {
    const auto& t = terms[i];
    double ratio = 0.0;
    if (t.integral > 0.0) {
      ratio = morrey ? t.osc * t.osc / t.integral : t.osc / std::sqrt(t.integral);
    } else if (t.osc > 0.0) {
      out.infinite = true;
      out.witness = balls[i];
      continue;
    }
    if (ratio > out.ratio_sup) {
      out.ratio_sup = ratio;
      if (!out.infinite) out.witness = balls[i];
    }
  }
  return out;
}

}  // namespace

BallRatioReport check_star(const ScalarField& field, const LipschitzGraph& graph, const std::vector<Ball>& balls,
                           double C, const BallOptions& opts) {
  auto out = ball_ratio_sweep(field, graph, balls, opts, false);
  out.holds = !out.infinite && out.ratio_sup <= C;
  return out;
}

BallRatioReport morrey_ratio(const ScalarField& field, const LipschitzGraph& graph, const std::vector<Ball>& balls,
                             const BallOptions& opts) {
  auto out = ball_ratio_sweep(field, graph, balls, opts, true);
  out.holds = !out.infinite;
  return out;
}

ClassReport classify(const ScalarField& field, const LipschitzGraph& graph, const SampleSet& samples,
                     const std::vector<Ball>& balls, const ClassifyOptions& opts) {
  if (!(opts.gradient_alpha > 0.0 && opts.gradient_alpha <= 2.0)) {
    throw std::invalid_argument("gradient_alpha must lie in (0, 2]");
  }
  if (!(opts.power_alpha > 0.0 && opts.power_alpha < 1.0)) throw std::invalid_argument("power_alpha must lie in (0, 1)");
  ClassReport rep;
  rep.samples = samples.points.size();
  rep.sharp = check_sharp(field, samples, opts.theta);
  rep.prop31 = rep.prop32 = rep.prop33_log = rep.prop33_inverse = rep.prop33_power = true;

  const int n = field.n;
  const double ga = opts.gradient_alpha;
  const double pa = opts.power_alpha;
  auto grad_power = [&field, ga](const DomainPoint& p) { return std::pow(field.grad(p).norm(), ga); };

  for (const auto& p : samples.points) {
    const double u = field.u(p);
    const double lap = field.laplacian(p);
    const double g2 = field.grad(p).norm_squared();
    const double slack = opts.tolerance * (1.0 + std::abs(u * lap) + g2);

    if (u < 0.0 || lap < -opts.tolerance * (1.0 + std::abs(lap))) rep.prop31 = false;

    const double step = std::min(opts.fd_step, 0.5 * p.height(graph));
    if (step > 0.0) {
      const double lap_g = fd_laplacian(grad_power, p, n, step);
      if (lap_g < -opts.fd_tolerance * (1.0 + std::abs(grad_power(p)))) rep.prop32 = false;
    }

    if (u <= 0.0) {
      ++rep.nonpositive_samples;
      rep.prop33_log = rep.prop33_inverse = rep.prop33_power = false;
      continue;
    }
    // Chain rule: lap ln u, lap u^{-1}, lap u^alpha in terms of u, grad u, lap u.
    const double lap_log = (u * lap - g2) / (u * u);
    const double lap_inv = (2.0 * g2 - u * lap) / (u * u * u);
    const double lap_pow = pa * std::pow(u, pa - 2.0) * (u * lap - (1.0 - pa) * g2);
    if (lap_log * u * u > slack) rep.prop33_log = false;
    if (lap_inv * u * u * u < -slack) rep.prop33_inverse = false;
    if (lap_pow > slack * pa * std::pow(u, pa - 2.0)) rep.prop33_power = false;
  }
  if (rep.samples == 0) rep.prop31 = rep.prop32 = rep.prop33_log = rep.prop33_inverse = rep.prop33_power = false;
  rep.implied_theta = rep.prop33_power ? 1.0 - pa : 0.0;

  if (!balls.empty()) {
    rep.star = check_star(field, graph, balls, opts.star_C, opts.balls);
    rep.morrey = morrey_ratio(field, graph, balls, opts.balls);
  }
  return rep;
}

}  // namespace ealab
