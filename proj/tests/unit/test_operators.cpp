#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "ealab/operators.hpp"

using namespace ealab;

namespace {

const double kPi = std::acos(-1.0);

DomainPoint pt(double x, double y) { return {Vec{x}, y}; }

// Exhaustive search over ordered chains; exponential, only for tiny inputs.
std::size_t brute_force_chain(const std::vector<DomainPoint>& pts, const std::vector<double>& vals, const Vec& X,
                              double eps, double beta) {
  const std::size_t n = pts.size();
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = distance(pts[i].ambient(), X);
  std::size_t best = 1;
  std::function<void(std::size_t, std::size_t)> extend = [&](std::size_t last, std::size_t len) {
    best = std::max(best, len);
    for (std::size_t k = 0; k < n; ++k) {
      if (dist[k] < beta * dist[last] && std::abs(vals[k] - vals[last]) >= eps) extend(k, len + 1);
    }
  };
  for (std::size_t i = 0; i < n; ++i) extend(i, 1);
  return best > 1 ? best : 0;
}

}  // namespace

TEST_CASE("total variation of piecewise-constant fields has faces only") {
  const auto g = LipschitzGraph::flat(1);
  const auto grid = AdaptedGrid::over_root(RootCube::unit(1), 4);
  std::vector<double> zero(static_cast<std::size_t>(grid.cells()), 2.0);
  CHECK(total_variation_piecewise(grid, g, zero).total() == 0.0);

  std::vector<double> indicator(zero.size());
  for (std::int64_t c = 0; c < grid.cells(); ++c) indicator[static_cast<std::size_t>(c)] = grid.center(c)[0] < 0.5 ? 1.0 : 0.0;
  auto tv = total_variation_piecewise(grid, g, indicator);
  CHECK_FALSE(tv.has_volume_part());
  CHECK(tv.face_total() == doctest::Approx(1.0));

  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> level(0, 3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(zero.size());
    for (auto& x : v) x = level(rng) * 0.5;
    double oracle = 0.0;
    for (std::int64_t c = 0; c < grid.cells(); ++c) {
      const auto idx = grid.unflatten(c);
      for (int a = 0; a < 2; ++a) {
        if (idx[static_cast<std::size_t>(a)] + 1 >= grid.count[static_cast<std::size_t>(a)]) continue;
        oracle += std::abs(v[static_cast<std::size_t>(c)] - v[static_cast<std::size_t>(c + grid.stride(a))]) / 16.0;
      }
    }
    auto mu = total_variation_piecewise(grid, g, v);
    CHECK_FALSE(mu.has_volume_part());
    CHECK(mu.total() == doctest::Approx(oracle).epsilon(1e-14));
  }
}

TEST_CASE("total variation of a smooth field") {
  const auto g = LipschitzGraph::flat(1);
  const auto grid = AdaptedGrid::over_root(RootCube::unit(1), 5);
  std::vector<double> y(static_cast<std::size_t>(grid.cells()));
  for (std::int64_t c = 0; c < grid.cells(); ++c) y[static_cast<std::size_t>(c)] = grid.center(c)[1];
  auto tv = total_variation_smooth(grid, g, y);
  CHECK(tv.face_total() == 0.0);
  CHECK(tv.volume_total() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("area function closed form for u = y") {
  const auto g = LipschitzGraph::flat(1);
  auto u = builtin_field("coordinate_y", 1);
  for (double alpha : {0.5, 1.0}) {
    auto a = area_function(u, g, Vec{0.0}, {alpha, 0.0, 1.0}, {.depth = 9});
    CHECK(a.value == doctest::Approx(std::sqrt(alpha)).epsilon(0.01));
    CHECK(std::abs(a.value - a.coarse_value) / a.value < 0.02);
  }
  auto half = area_function(u, g, Vec{0.0}, {1.0, 0.0, 0.5}, {.depth = 9});
  CHECK(half.value == doctest::Approx(0.5).epsilon(0.01));
  CHECK(area_function(builtin_field("constant", 1), g, Vec{0.0}, {1.0, 0.0, 1.0}).value == 0.0);
}

TEST_CASE("area function grows with truncation height") {
  const auto g = LipschitzGraph::flat(1);
  auto h = builtin_field("harmonic_sinexp", 1);
  double prev = 0.0;
  for (double t : {0.125, 0.25, 0.5, 1.0}) {
    auto a = area_function(h, g, Vec{0.3}, {0.8, 0.0, t}, {.depth = 8});
    CHECK(a.value >= prev);
    prev = a.value;
  }
}

TEST_CASE("nontangential maximal function") {
  const auto g = LipschitzGraph::flat(1);
  auto y = builtin_field("coordinate_y", 1);
  auto n = nontangential_max(y, g, Vec{0.0}, {1.0, 0.0, 1.0}, 9);
  CHECK(n.value <= 1.0);
  CHECK(n.value >= 1.0 - std::ldexp(1.0, -8));
  CHECK(nontangential_max(builtin_field("constant", 1, {.c = -2.5}), g, Vec{0.0}, {1.0, 0.0, 1.0}, 6).value == 2.5);

  auto h = builtin_field("harmonic_sinexp", 1);
  double prev = 0.0;
  for (double a : {0.25, 0.5, 1.0}) {
    auto r = nontangential_max(h, g, Vec{0.1}, {a, 0.0, 1.0}, 7);
    CHECK(r.value >= prev);
    prev = r.value;
  }
}

TEST_CASE("counting function: hand-derived chain of length two") {
  const auto g = LipschitzGraph::flat(1);
  auto y = builtin_field("coordinate_y", 1);
  CountingParams p{.r = 1.0, .epsilon = 0.6, .beta = 0.5, .alpha = 1.0};
  auto res = counting_function(y, g, Vec{0.0}, p, 7);
  CHECK(res.count == 2);
  REQUIRE(res.chain.size() == 2);
  CHECK(std::abs(res.chain[0].y - res.chain[1].y) >= 0.6);

  CHECK(counting_function(builtin_field("constant", 1), g, Vec{0.0}, p, 7).count == 0);
}

TEST_CASE("counting function is monotone in epsilon") {
  const auto g = LipschitzGraph::flat(1);
  auto h = builtin_field("harmonic_sinexp", 1);
  std::size_t prev = std::numeric_limits<std::size_t>::max();
  for (double eps : {0.02, 0.05, 0.1, 0.2, 0.4}) {
    auto r = counting_function(h, g, Vec{0.5}, {.r = 1.0, .epsilon = eps, .beta = 0.7, .alpha = 1.0}, 6);
    CHECK(r.count <= prev);
    prev = r.count;
  }
  CountingParams bad{.beta = 1.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("longest chain agrees with exhaustive search") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ux(-1.0, 1.0), uy(0.01, 1.0), uv(-1.0, 1.0);
  const Vec X{0.0, 0.0};
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<DomainPoint> pts;
    std::vector<double> vals;
    for (int i = 0; i < 7; ++i) {
      pts.push_back(pt(ux(rng), uy(rng)));
      vals.push_back(uv(rng));
    }
    auto res = longest_chain(pts, vals, X, 0.5, 0.8);
    CHECK(res.count == brute_force_chain(pts, vals, X, 0.5, 0.8));
    // Distances to the vertex strictly decrease along the witness, so no cycle.
    for (std::size_t k = 1; k < res.chain.size(); ++k) {
      CHECK(distance(res.chain[k].ambient(), X) < 0.8 * distance(res.chain[k - 1].ambient(), X));
    }
  }
}

TEST_CASE("Carleson constants of closed-form measures") {
  const auto g = LipschitzGraph::flat(1);
  const auto grid = AdaptedGrid::over_root(RootCube::unit(1), 8);
  CellMeasure zero(grid);
  const std::vector<double> radii{0.5, 0.25, 0.125};
  const std::vector<Vec> centre{Vec{0.5}};
  CHECK(carleson_constant(zero, g, radii, centre).constant == 0.0);

  CellMeasure leb(grid);
  for (auto& w : leb.volume_weights()) w = grid.cell_volume();
  auto c = carleson_constant(leb, g, radii, centre);
  CHECK(c.constant == doctest::Approx(kPi * 0.5 / 2).epsilon(0.005));
  CHECK(c.witness_r == 0.5);
  CHECK(carleson_constant(leb.scaled(3.0), g, radii, centre).constant == doctest::Approx(3.0 * c.constant));

  // Unit mass in one cell centred at height ~0.258 above x0.
  const auto coarse = AdaptedGrid::over_root(RootCube::unit(1), 6);
  CellMeasure point(coarse);
  const std::int64_t cell = coarse.flatten(CellIndex{32, 16, 0, 0});
  point.volume_weights()[static_cast<std::size_t>(cell)] = 1.0;
  const Vec x0{coarse.center(cell)[0]};
  const std::vector<double> ladder{0.2, 0.3, 0.5, 1.0};
  auto pm = carleson_constant(point, g, ladder, std::vector<Vec>{x0});
  CHECK(pm.constant == doctest::Approx(1.0 / 0.3));
  CHECK(measure_in_ball(point, g, x0, 0.2) == 0.0);
}

TEST_CASE("Fatou averages") {
  const auto g = LipschitzGraph::flat(1);
  const std::vector<double> radii{0.25, 0.5};
  FatouOptions opts{.depth = 6, .boundary_samples = 8, .omega_samples = 3};
  CountingParams p{.r = 1.0, .epsilon = 0.3, .beta = 0.5, .alpha = 1.0};
  auto zero = fatou_average(builtin_field("constant", 1), g, p, RootCube::unit(1), radii, opts);
  CHECK(zero.sup == 0.0);

  auto y = builtin_field("coordinate_y", 1, {.clip = true});
  auto a = fatou_average(y, g, p, RootCube::unit(1), radii, opts);
  p.epsilon = 0.6;
  auto b = fatou_average(y, g, p, RootCube::unit(1), radii, opts);
  CHECK(a.sup > 0.0);
  CHECK(b.sup <= a.sup);

  CHECK_THROWS(fatou_average(builtin_field("paraboloid", 1), g, p, RootCube::unit(1), radii, opts));
}
