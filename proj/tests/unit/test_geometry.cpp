#include <cmath>
#include <random>

#include "doctest.h"
#include "ealab/geometry.hpp"

using namespace ealab;

namespace {

DomainPoint pt(double x, double y) { return {Vec{x}, y}; }

CurvedCube cube1(int m, std::int64_t j) {
  CurvedCube c{m, {}, RootCube::unit(1)};
  c.j[0] = j;
  return c;
}

}  // namespace

TEST_CASE("cone membership on the flat graph") {
  const auto g = LipschitzGraph::flat(1);
  ConeSpec cone{1.0};
  CHECK(cone_membership(g, Vec{0.0}, cone, pt(0.5, 1.0)));
  CHECK_FALSE(cone_membership(g, Vec{0.0}, cone, pt(2.0, 1.0)));
}

TEST_CASE("cone truncation uses the height above the vertex") {
  const auto g = LipschitzGraph::linear(Vec{0.5});
  ConeSpec cone{1.0, 0.0, 0.5};
  CHECK_FALSE(cone_membership(g, Vec{0.0}, cone, pt(0.0, 0.6)));
  CHECK(cone_membership(g, Vec{0.0}, cone, pt(0.0, 0.4)));
}

TEST_CASE("enlarging a cone never removes points") {
  const auto g = LipschitzGraph::linear(Vec{0.3});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ux(-2.0, 2.0), uy(-1.0, 3.0);
  ConeSpec small{0.6, 0.2, 1.0};
  ConeSpec large{0.9, 0.1, 1.5};
  for (int i = 0; i < 1000; ++i) {
    auto p = pt(ux(rng), uy(rng));
    if (cone_membership(g, Vec{0.0}, small, p)) CHECK(cone_membership(g, Vec{0.0}, large, p));
  }
}

TEST_CASE("curved cube membership") {
  const auto flat = LipschitzGraph::flat(1);
  const auto q0 = CurvedCube::root_cube(RootCube::unit(1));
  CHECK(cube_membership(flat, q0, pt(0.5, 0.5)));
  CHECK_FALSE(cube_membership(flat, q0, pt(0.5, 1.5)));
  const auto slope = LipschitzGraph::linear(Vec{1.0});
  CHECK(cube_membership(slope, q0, pt(0.5, 1.2)));
  CHECK_FALSE(cube_membership(slope, q0, pt(0.5, 0.4)));
}

TEST_CASE("cube centres") {
  const auto flat = LipschitzGraph::flat(1);
  auto c = centers(flat, CurvedCube::root_cube(RootCube::unit(1)));
  CHECK(c.center.x[0] == 0.5);
  CHECK(c.center.y == 0.5);
  CHECK(c.upper.y == 1.5);
  CHECK(c.half.y == 1.0);

  auto s = centers(LipschitzGraph::linear(Vec{1.0}), CurvedCube::root_cube(RootCube::unit(1)));
  CHECK(s.center.y == doctest::Approx(1.0));
  CHECK(s.upper.y == doctest::Approx(2.0));

  auto child = centers(flat, cube1(1, 0));
  CHECK(child.center.x[0] == 0.25);
  CHECK(child.center.y == 0.25);
  CHECK(child.upper.y == 0.75);
}

TEST_CASE("associated centre lies in the cube stacked above") {
  const auto g = LipschitzGraph::linear(Vec{0.7});
  for (int m = 0; m < 4; ++m) {
    for (std::int64_t j = 0; j < (1 << m); ++j) {
      auto q = cube1(m, j);
      auto up = centers(g, q).upper;
      DomainPoint lowered{up.x, up.y - q.side()};
      CHECK(cube_membership(g, q, lowered));
    }
  }
}

TEST_CASE("translated boxes") {
  auto t = translated_box(cube1(1, 0));
  CHECK(t.lo[0] == 0.0);
  CHECK(t.hi[0] == 0.5);
  CHECK(t.h_lo == 0.25);
  CHECK(t.h_hi == 0.75);

  auto root = translated_box(CurvedCube::root_cube(RootCube::unit(1)));
  CHECK(root.h_lo == 0.5);
  CHECK(root.h_hi == 1.0);

  const auto slope = LipschitzGraph::linear(Vec{1.0});
  auto big = CurvedCube::root_cube(RootCube::unit(1));
  // Non-root variant: a cube of side 1 one level above a side-2 root.
  CurvedCube q{1, {}, RootCube{Vec{0.0}, 2.0}};
  CHECK(translated_box(q).contains(slope, pt(0.5, 1.2)));
  CHECK_FALSE(translated_box(q).contains(slope, pt(0.5, 0.9)));
  CHECK(translated_box(big).contains(slope, pt(0.5, 1.2)));
}

TEST_CASE("translated boxes stay separated from the boundary") {
  for (int m = 1; m < 6; ++m) {
    auto q = cube1(m, 0);
    auto t = translated_box(q);
    CHECK(t.h_lo == doctest::Approx(q.side() / 2));
    CHECK(t.h_hi == doctest::Approx(1.5 * q.side()));
  }
}

TEST_CASE("shadow balls") {
  const auto flat = LipschitzGraph::flat(1);
  auto s = shadow(flat, pt(0.0, 1.0), 1.0);
  CHECK(s.boundary_distance == doctest::Approx(1.0));
  CHECK(s.radius == doctest::Approx(2.0));
  CHECK(shadow(flat, pt(0.0, 0.5), 0.5).radius == doctest::Approx(0.75));

  const auto vee = LipschitzGraph::abs_cone(1);
  auto v = shadow(vee, pt(0.0, 1.0), 1.0);
  CHECK(v.boundary_distance == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-6));
  CHECK(v.radius == doctest::Approx(2.0 / std::sqrt(2.0)).epsilon(1e-6));

  CHECK_THROWS_AS(shadow(flat, pt(0.0, -0.1), 1.0), std::invalid_argument);
}

TEST_CASE("cone and shadow agree on the flat graph") {
  // omega in the shadow of z iff z lies in the cone of aperture sqrt(a(a+2)).
  const auto flat = LipschitzGraph::flat(1);
  const double a = 1.0;
  const ConeSpec wide{std::sqrt(a * (a + 2.0))};
  const ConeSpec narrow{a};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(-2.0, 2.0), uh(0.05, 1.5);
  int agree = 0;
  for (int i = 0; i < 1000; ++i) {
    auto z = pt(ux(rng), uh(rng));
    Vec w{ux(rng)};
    auto s = shadow(flat, z, a);
    const bool in_shadow = s.contains_boundary_point(flat, w);
    agree += in_shadow == cone_membership(flat, w, wide, z);
    if (cone_membership(flat, w, narrow, z)) CHECK(in_shadow);
  }
  CHECK(agree == 1000);
}

TEST_CASE("ball-box inclusions") {
  const auto flat = LipschitzGraph::flat(1);
  CHECK(ball_box_check(flat, CurvedCube::root_cube(RootCube::unit(1))).ok());
  CHECK(ball_box_check(flat, cube1(3, 5)).ok());
  auto r = ball_box_check(LipschitzGraph::linear(Vec{1.0}), CurvedCube::root_cube(RootCube::unit(1)));
  CHECK(r.ok());
  CHECK(r.outer_constant == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("dyadic children") {
  auto kids = dyadic_children(CurvedCube::root_cube(RootCube::unit(1)));
  REQUIRE(kids.size() == 2);
  CHECK(kids[0].lower_corner()[0] == 0.0);
  CHECK(kids[0].side() == 0.5);
  CHECK(kids[1].lower_corner()[0] == 0.5);

  auto quads = dyadic_children(CurvedCube::root_cube(RootCube::unit(2)));
  CHECK(quads.size() == 4);
  CHECK(dyadic_children(quads[3])[0].side() == 0.25);

  // Base volumes partition exactly; curved heights halve with the side.
  for (const auto& q : quads) {
    double sum = 0.0;
    for (const auto& c : dyadic_children(q)) {
      sum += c.side() * c.side();
      CHECK(q.contains_x(c.center()));
    }
    CHECK(sum == q.side() * q.side());
  }
}
