#include <cmath>

#include "doctest.h"
#include "ealab/grid.hpp"

using namespace ealab;

TEST_CASE("adapted grid indexing") {
  auto g = AdaptedGrid::over_root(RootCube::unit(2), 3);
  CHECK(g.axes() == 3);
  CHECK(g.cells() == 512);
  CHECK(g.stride(2) == 1);
  CHECK(g.stride(1) == 8);
  CHECK(g.stride(0) == 64);
  for (std::int64_t c : {0L, 7L, 100L, 511L}) CHECK(g.flatten(g.unflatten(c)) == c);

  auto c = g.center(CellIndex{1, 2, 3, 0});
  CHECK(c[0] == 0.1875);
  CHECK(c[1] == 0.3125);
  CHECK(c[2] == 0.4375);
  CHECK(g.cell_volume() == 1.0 / 512);
  CHECK(g.face_area(0) == 1.0 / 64);
  CHECK(g.half_diagonal() == doctest::Approx(std::sqrt(3.0) / 16));
}

TEST_CASE("adapted to Cartesian follows the graph") {
  const auto g = LipschitzGraph::linear(Vec{0.5});
  auto p = to_cartesian(g, Vec{0.4, 0.25});
  CHECK(p.x[0] == 0.4);
  CHECK(p.y == doctest::Approx(0.45));
  CHECK(p.height(g) == doctest::Approx(0.25));
}

TEST_CASE("cell measures") {
  CellMeasure mu(AdaptedGrid::over_root(RootCube::unit(1), 2));
  CHECK(mu.total() == 0.0);
  CHECK_FALSE(mu.has_volume_part());
  mu.volume_weights()[3] = 0.5;
  mu.face_weights(1)[4] = 0.25;
  CHECK(mu.total() == 0.75);
  CHECK(mu.has_volume_part());
  CHECK(mu.scaled(4.0).total() == 3.0);

  mu.face_weights(0)[0] = -1.0;
  CHECK_THROWS_AS(mu.validate(), std::domain_error);
  mu.face_weights(0)[0] = NAN;
  CHECK_THROWS_AS(mu.validate(), std::domain_error);
}
