#pragma once

// Dyadic stopping families for the John-Nirenberg style good-lambda
// iteration on [0, 1]. All set measures are exact rationals.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace ealab {

using Rational = boost::multiprecision::cpp_rational;

// Dyadic interval [j 2^-m, (j + 1) 2^-m).
struct DyadicCube {
  int m = 0;
  std::int64_t j = 0;

  bool operator==(const DyadicCube&) const = default;
  bool contains(const DyadicCube& other) const;  // non-strict
};

// f on the 2^depth finest cells plus optional cube constants a_Q stored in
// heap order (level m at offset 2^m - 1). Empty `a` means exact averages.
struct DyadicFunction {
  int depth = 0;
  std::vector<double> values;
  std::vector<double> a;

  std::size_t cells() const { return std::size_t{1} << depth; }
  void validate() const;
};

constexpr int kMaxDyadicDepth = 20;

// f = sum over levels of +-increment: each cube draws a sign s and adds
// +s inc on its left half, -s inc on its right half.
DyadicFunction synth_martingale(int depth, double increment, std::uint64_t seed);

std::string dyadic_to_json(const DyadicFunction& df);
DyadicFunction dyadic_from_json(const std::string& text);

// "num/den" in lowest terms.
std::string fraction_string(const Rational& q);

struct HypothesisReport {
  bool holds = true;
  Rational worst_ratio{0};  // max over cubes of |{|f - a_Q| > lambda} cap Q| / |Q|
  DyadicCube worst;
};

// Exact check of |{x in Q : |f - a_Q| > lambda}| < c |Q| on every dyadic cube.
HypothesisReport check_hypothesis(const DyadicFunction& df, double lambda, double c);

class HypothesisError : public std::domain_error {
 public:
  HypothesisError(const std::string& what, DyadicCube cube) : std::domain_error(what), cube_(cube) {}
  const DyadicCube& cube() const { return cube_; }

 private:
  DyadicCube cube_;
};

struct FamilyOptions {
  int steps = 4;
  bool enforce_hypothesis = true;  // require the c = 1/4 hypothesis before building
};

struct StoppingFamilies {
  int depth = 0;
  // steps[m - 1] = G_m; each entry records its parent cube in G_{m-1}
  // (the root for m = 1).
  std::vector<std::vector<DyadicCube>> steps;
  std::vector<std::vector<DyadicCube>> parents;

  // Exceptional set of step m as a per-cell mask.
  std::vector<std::uint8_t> mask(int m) const;
  Rational measure(int m) const;
};

// G_{m+1}: maximal strict dyadic subcubes Q' of each Q_j in G_m with
// 3 |{x in Q' : |f - a_{Q_j}| > lambda}| >= |Q'|.
StoppingFamilies build_families(const DyadicFunction& df, double lambda, const FamilyOptions& opts = {});

struct PropertyFailure {
  std::string property;
  DyadicCube cube;
  std::string detail;
};

struct PropertyReport {
  bool root_excluded = true;   // (i)
  bool exceed_band = true;     // (ii) exceed measure in [1/3, 2/3) |Q_j|
  bool good_outside = true;    // (iii) |f - a_Q| <= lambda off G_1
  bool packing = true;         // (iv) sum |Q_j| <= 3/4
  bool constants = true;       // |a_Q - a_{Q_j}| <= 2 lambda
  Rational g1_measure{0};
  std::vector<PropertyFailure> failures;

  bool all() const { return root_excluded && exceed_band && good_outside && packing && constants; }
};

// Checks G_1 against its reference cube (the root); families need not come
// from build_families.
PropertyReport verify_properties(const StoppingFamilies& families, const DyadicFunction& df, double lambda);

struct DecayRow {
  int m = 0;
  double t = 0.0;                // 3 m lambda
  Rational tail{0};              // |{|f - a_root| > t}|
  Rational family_measure{0};    // sum over G_m
  Rational bound{0};             // (3/4)^m
  double exp_bound = 0.0;        // e^{-c2 t}
  double identity_error = 0.0;   // |(3/4)^m - e^{-c2 t}| / (3/4)^m
  bool off_family = true;        // |f - a_root| < t on cells outside G_m
  bool holds = false;
};

struct DecayReport {
  double c2 = 0.0;  // ln(4/3) / (3 lambda)
  std::vector<DecayRow> rows;
  bool nesting = true;
  bool holds = true;
};

// Requires the c = 1/4 hypothesis; rows for m = 1..steps.
DecayReport decay_check(const DyadicFunction& df, double lambda, int steps = 4);

}  // namespace ealab
