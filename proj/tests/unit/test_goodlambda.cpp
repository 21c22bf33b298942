#include <cmath>

#include "doctest.h"
#include "ealab/goodlambda.hpp"

using namespace ealab;

namespace {

DyadicFunction spike(int depth, std::int64_t cell, double height) {
  DyadicFunction df;
  df.depth = depth;
  df.values.assign(df.cells(), 0.0);
  df.values[static_cast<std::size_t>(cell)] = height;
  return df;
}

// First seed whose depth-D martingale passes the c = 1/4 hypothesis.
DyadicFunction passing_martingale(int depth, double lambda, std::uint64_t from) {
  for (std::uint64_t s = from; s < from + 500; ++s) {
    auto df = synth_martingale(depth, lambda / 4, s);
    if (check_hypothesis(df, lambda, 0.25).holds) return df;
  }
  FAIL("no passing seed");
  return {};
}

}  // namespace

TEST_CASE("synthetic martingales") {
  auto zero = synth_martingale(6, 0.0, 1);
  for (double v : zero.values) CHECK(v == 0.0);

  auto one = synth_martingale(1, 0.25, 3);
  REQUIRE(one.values.size() == 2);
  CHECK(std::abs(one.values[0]) == 0.25);
  CHECK(one.values[0] == -one.values[1]);

  CHECK(synth_martingale(8, 0.25, 42).values == synth_martingale(8, 0.25, 42).values);
  CHECK(synth_martingale(8, 0.25, 42).values != synth_martingale(8, 0.25, 43).values);
  CHECK_THROWS(synth_martingale(kMaxDyadicDepth + 1, 0.25, 1));
}

TEST_CASE("hypothesis check") {
  DyadicFunction flat{3, std::vector<double>(8, 1.5), {}};
  auto rep = check_hypothesis(flat, 1.0, 0.25);
  CHECK(rep.holds);
  CHECK(rep.worst_ratio == 0);

  // f = (0, 2 lambda), a_root = 0: half the root exceeds lambda.
  DyadicFunction halves{1, {0.0, 2.0}, {0.0, 0.0, 2.0}};
  auto bad = check_hypothesis(halves, 1.0, 0.25);
  CHECK_FALSE(bad.holds);
  CHECK(bad.worst_ratio == Rational(1, 2));
  CHECK(bad.worst == DyadicCube{0, 0});

  auto mart = passing_martingale(8, 1.0, 1);
  CHECK(check_hypothesis(mart, 1.0, 0.25).worst_ratio < Rational(1, 4));
  CHECK_THROWS_AS(check_hypothesis(mart, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("stopping families") {
  DyadicFunction flat{4, std::vector<double>(16, -3.0), {}};
  auto empty = build_families(flat, 1.0);
  for (const auto& g : empty.steps) CHECK(g.empty());
  CHECK(verify_properties(empty, flat, 1.0).all());

  // A 10-lambda spike exceeds on one cell: the largest strict subcube with
  // 3 * count >= size has two cells.
  auto df = spike(6, 13, 10.0);
  CHECK_THROWS_AS(build_families(df, 1.0), HypothesisError);
  auto fam = build_families(df, 1.0, {.steps = 1, .enforce_hypothesis = false});
  REQUIRE(fam.steps[0].size() == 1);
  CHECK(fam.steps[0][0] == DyadicCube{5, 6});
  CHECK(fam.measure(1) == Rational(1, 32));
}

TEST_CASE("appendix properties on martingales") {
  for (std::uint64_t from : {1u, 100u, 200u}) {
    auto df = passing_martingale(10, 1.0, from);
    auto fam = build_families(df, 1.0);
    for (const auto& q : fam.steps[0]) CHECK_FALSE(q == DyadicCube{0, 0});
    auto rep = verify_properties(fam, df, 1.0);
    CHECK(rep.all());
    CHECK(rep.g1_measure <= Rational(3, 4));

    // Nesting: every G_{m+1} cube sits strictly inside its recorded parent.
    for (std::size_t m = 1; m < fam.steps.size(); ++m) {
      for (std::size_t i = 0; i < fam.steps[m].size(); ++i) {
        const auto& q = fam.steps[m][i];
        const auto& p = fam.parents[m][i];
        CHECK(p.contains(q));
        CHECK(p.m < q.m);
        bool found = false;
        for (const auto& prev : fam.steps[m - 1]) found = found || prev == p;
        CHECK(found);
      }
      CHECK(fam.measure(static_cast<int>(m) + 1) <= fam.measure(static_cast<int>(m)));
    }
  }
}

TEST_CASE("hand-built families that are not maximal fail (ii)") {
  auto df = spike(6, 13, 10.0);
  StoppingFamilies fam;
  fam.depth = 6;
  fam.steps = {{DyadicCube{6, 13}}};
  fam.parents = {{DyadicCube{0, 0}}};
  auto rep = verify_properties(fam, df, 1.0);
  CHECK_FALSE(rep.exceed_band);
  REQUIRE_FALSE(rep.failures.empty());
  CHECK(rep.failures[0].cube == DyadicCube{6, 13});
}

TEST_CASE("exponential decay") {
  const double lambda = 1.0;
  const double c2 = std::log(4.0 / 3.0) / (3.0 * lambda);
  for (int m = 1; m <= 10; ++m) {
    const double lhs = std::pow(0.75, m);
    CHECK(std::abs(lhs - std::exp(-c2 * 3.0 * m * lambda)) / lhs < 1e-12);
  }

  DyadicFunction flat{5, std::vector<double>(32, 0.5), {}};
  for (const auto& row : decay_check(flat, lambda).rows) CHECK(row.tail == 0);

  auto df = passing_martingale(10, lambda, 1);
  auto rep = decay_check(df, lambda, 4);
  CHECK(rep.c2 == doctest::Approx(c2));
  CHECK(rep.holds);
  CHECK(rep.nesting);
  REQUIRE(rep.rows.size() == 4);
  for (const auto& row : rep.rows) {
    CHECK(row.t == 3.0 * row.m * lambda);
    CHECK(row.tail <= row.bound);
    CHECK(row.family_measure <= row.bound);
    CHECK(row.identity_error < 1e-12);
    CHECK(row.off_family);
  }
}

TEST_CASE("serialisation") {
  auto df = synth_martingale(5, 0.25, 9);
  auto back = dyadic_from_json(dyadic_to_json(df));
  CHECK(back.depth == df.depth);
  CHECK(back.values == df.values);
  CHECK(fraction_string(Rational(6, 8)) == "3/4");
  CHECK(fraction_string(Rational(0)) == "0/1");
  CHECK_THROWS(dyadic_from_json(R"({"depth": 2, "values": [1, 2, 3]})"));
}
