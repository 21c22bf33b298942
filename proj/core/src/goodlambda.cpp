#include "ealab/goodlambda.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"

namespace ealab {

namespace {

std::size_t heap_index(int m, std::int64_t j) { return (std::size_t{1} << m) - 1 + static_cast<std::size_t>(j); }

// f and a_Q as exact rationals; doubles convert without rounding.
struct Exact {
  int depth = 0;
  std::vector<Rational> f;
  std::vector<Rational> a;

  explicit Exact(const DyadicFunction& df) : depth(df.depth) {
    df.validate();
    f.reserve(df.values.size());
    for (double v : df.values) f.emplace_back(v);
    if (!df.a.empty()) {
      for (double v : df.a) a.emplace_back(v);
      return;
    }
    a.resize(heap_index(depth + 1, 0));
    for (std::size_t i = 0; i < f.size(); ++i) a[heap_index(depth, static_cast<std::int64_t>(i))] = f[i];
    for (int m = depth - 1; m >= 0; --m) {
      for (std::int64_t j = 0; j < (std::int64_t{1} << m); ++j) {
        a[heap_index(m, j)] = (a[heap_index(m + 1, 2 * j)] + a[heap_index(m + 1, 2 * j + 1)]) / 2;
      }
    }
  }

  const Rational& const_of(const DyadicCube& q) const { return a[heap_index(q.m, q.j)]; }
  std::size_t first(const DyadicCube& q) const { return static_cast<std::size_t>(q.j) << (depth - q.m); }
  std::size_t size(const DyadicCube& q) const { return std::size_t{1} << (depth - q.m); }

  std::size_t exceed(const DyadicCube& q, const Rational& ref, const Rational& level) const {
    std::size_t count = 0;
    for (std::size_t i = first(q); i < first(q) + size(q); ++i) count += abs(f[i] - ref) > level ? 1 : 0;
    return count;
  }
};

Rational cell_measure(std::size_t count, int depth) { return Rational(count) / Rational(std::size_t{1} << depth); }

void require_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be > 0");
}

void select_maximal(const Exact& ex, const DyadicCube& q, const std::vector<std::size_t>& prefix, std::size_t base,
                    std::vector<DyadicCube>& out) {
  const std::size_t lo = ex.first(q) - base;
  const std::size_t count = prefix[lo + ex.size(q)] - prefix[lo];
  if (3 * count >= ex.size(q)) {
    out.push_back(q);
    return;
  }
  if (q.m == ex.depth) return;
  select_maximal(ex, {q.m + 1, 2 * q.j}, prefix, base, out);
  select_maximal(ex, {q.m + 1, 2 * q.j + 1}, prefix, base, out);
}

}  // namespace

bool DyadicCube::contains(const DyadicCube& other) const {
  return other.m >= m && (other.j >> (other.m - m)) == j;
}

void DyadicFunction::validate() const {
  if (depth < 0 || depth > kMaxDyadicDepth) throw std::invalid_argument("depth must lie in [0, 20]");
  if (values.size() != cells()) throw std::invalid_argument("values must have 2^depth entries");
  if (!a.empty() && a.size() != heap_index(depth + 1, 0)) {
    throw std::invalid_argument("a must have 2^(depth+1) - 1 entries");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("values must be finite");
  }
  for (double v : a) {
    if (!std::isfinite(v)) throw std::invalid_argument("a must be finite");
  }
}

DyadicFunction synth_martingale(int depth, double increment, std::uint64_t seed) {
  if (depth < 0 || depth > kMaxDyadicDepth) throw std::invalid_argument("synth_martingale: depth must lie in [0, 20]");
  if (!std::isfinite(increment)) throw std::invalid_argument("synth_martingale: increment must be finite");
  DyadicFunction df;
  df.depth = depth;
  df.values.assign(df.cells(), 0.0);
  std::mt19937_64 rng(seed);
  for (int m = 0; m < depth; ++m) {
    const std::size_t half = std::size_t{1} << (depth - m - 1);
    for (std::size_t j = 0; j < (std::size_t{1} << m); ++j) {
      const double s = (rng() & 1) ? increment : -increment;
      const std::size_t first = j * 2 * half;
      for (std::size_t i = 0; i < half; ++i) {
        df.values[first + i] += s;
        df.values[first + half + i] -= s;
      }
    }
  }
  return df;
}

std::string dyadic_to_json(const DyadicFunction& df) {
  nlohmann::ordered_json doc;
  doc["depth"] = df.depth;
  doc["values"] = df.values;
  if (!df.a.empty()) doc["a"] = df.a;
  return doc.dump();
}

DyadicFunction dyadic_from_json(const std::string& text) {
  DyadicFunction df;
  try {
    const auto doc = nlohmann::json::parse(text);
    df.depth = doc.at("depth").get<int>();
    df.values = doc.at("values").get<std::vector<double>>();
    if (doc.contains("a")) df.a = doc.at("a").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("dyadic function JSON: ") + e.what());
  }
  df.validate();
  return df;
}

std::string fraction_string(const Rational& q) {
  return numerator(q).str() + "/" + denominator(q).str();
}

HypothesisReport check_hypothesis(const DyadicFunction& df, double lambda, double c) {
  require_lambda(lambda);
  if (!(c > 0.0 && c < 0.5)) throw std::invalid_argument("c must lie in (0, 1/2)");
  const Exact ex(df);
  const Rational lam(lambda), cq(c);
  HypothesisReport out;
  for (int m = 0; m <= ex.depth; ++m) {
    for (std::int64_t j = 0; j < (std::int64_t{1} << m); ++j) {
      const DyadicCube q{m, j};
      const Rational ratio = Rational(ex.exceed(q, ex.const_of(q), lam)) / Rational(ex.size(q));
      if (ratio > out.worst_ratio) {
        out.worst_ratio = ratio;
        out.worst = q;
      }
    }
  }
  out.holds = out.worst_ratio < cq;
  return out;
}

std::vector<std::uint8_t> StoppingFamilies::mask(int m) const {
  std::vector<std::uint8_t> out(std::size_t{1} << depth, 0);
  if (m < 1 || m > static_cast<int>(steps.size())) return out;
  for (const auto& q : steps[static_cast<std::size_t>(m - 1)]) {
    const std::size_t first = static_cast<std::size_t>(q.j) << (depth - q.m);
    for (std::size_t i = 0; i < (std::size_t{1} << (depth - q.m)); ++i) out[first + i] = 1;
  }
  return out;
}

Rational StoppingFamilies::measure(int m) const {
  Rational total(0);
  if (m < 1 || m > static_cast<int>(steps.size())) return total;
  for (const auto& q : steps[static_cast<std::size_t>(m - 1)]) total += Rational(1) / Rational(std::size_t{1} << q.m);
  return total;
}

StoppingFamilies build_families(const DyadicFunction& df, double lambda, const FamilyOptions& opts) {
  require_lambda(lambda);
  if (opts.steps < 1) throw std::invalid_argument("build_families: steps must be >= 1");
  if (opts.enforce_hypothesis) {
    const auto hyp = check_hypothesis(df, lambda, 0.25);
    if (!hyp.holds) {
      throw HypothesisError("hypothesis fails at c = 1/4: ratio " + fraction_string(hyp.worst_ratio), hyp.worst);
    }
  }
  const Exact ex(df);
  const Rational lam(lambda);
  StoppingFamilies out;
  out.depth = ex.depth;
  std::vector<DyadicCube> current{{0, 0}};
  for (int step = 0; step < opts.steps; ++step) {
    std::vector<DyadicCube> next, parents;
    for (const auto& q : current) {
      const Rational& ref = ex.const_of(q);
      const std::size_t base = ex.first(q);
      std::vector<std::size_t> prefix(ex.size(q) + 1, 0);
      for (std::size_t i = 0; i < ex.size(q); ++i) prefix[i + 1] = prefix[i] + (abs(ex.f[base + i] - ref) > lam ? 1 : 0);
      if (q.m == ex.depth) continue;
      const std::size_t before = next.size();
      select_maximal(ex, {q.m + 1, 2 * q.j}, prefix, base, next);
      select_maximal(ex, {q.m + 1, 2 * q.j + 1}, prefix, base, next);
      parents.insert(parents.end(), next.size() - before, q);
    }
    out.steps.push_back(next);
    out.parents.push_back(std::move(parents));
    current = std::move(next);
  }
  return out;
}

PropertyReport verify_properties(const StoppingFamilies& families, const DyadicFunction& df, double lambda) {
  require_lambda(lambda);
  const Exact ex(df);
  if (families.depth != ex.depth) throw std::invalid_argument("verify_properties: depth mismatch");
  const Rational lam(lambda);
  const DyadicCube root{0, 0};
  const Rational& a_root = ex.const_of(root);
  PropertyReport out;
  if (families.steps.empty()) return out;
  const auto& g1 = families.steps.front();

  for (const auto& q : g1) {
    if (q == root) {
      out.root_excluded = false;
      out.failures.push_back({"i", q, "root selected"});
    }
    const std::size_t count = ex.exceed(q, a_root, lam);
    if (!(3 * count >= ex.size(q) && 3 * count < 2 * ex.size(q))) {
      out.exceed_band = false;
      out.failures.push_back({"ii", q, "exceed measure " + std::to_string(count) + "/" + std::to_string(ex.size(q)) + " of |Q_j|"});
    }
    if (abs(a_root - ex.const_of(q)) > 2 * lam) {
      out.constants = false;
      out.failures.push_back({"constants", q, "|a_Q - a_Qj| = " + fraction_string(Rational(abs(a_root - ex.const_of(q))))});
    }
    out.g1_measure += Rational(1) / Rational(std::size_t{1} << q.m);
  }

  std::vector<std::uint8_t> covered(ex.f.size(), 0);
  for (const auto& q : g1) {
    for (std::size_t i = ex.first(q); i < ex.first(q) + ex.size(q); ++i) {
      if (covered[i]) {
        out.packing = false;
        out.failures.push_back({"iv", q, "overlapping cubes"});
        break;
      }
      covered[i] = 1;
    }
  }
  if (out.g1_measure > Rational(3, 4)) {
    out.packing = false;
    out.failures.push_back({"iv", root, "sum |Q_j| = " + fraction_string(out.g1_measure)});
  }
  for (std::size_t i = 0; i < ex.f.size(); ++i) {
    if (!covered[i] && abs(ex.f[i] - a_root) > lam) {
      out.good_outside = false;
      out.failures.push_back({"iii", {ex.depth, static_cast<std::int64_t>(i)}, "|f - a_Q| > lambda off G_1"});
      break;
    }
  }
  return out;
}

DecayReport decay_check(const DyadicFunction& df, double lambda, int steps) {
  require_lambda(lambda);
  if (steps < 1) throw std::invalid_argument("decay_check: steps must be >= 1");
  const StoppingFamilies fam = build_families(df, lambda, {steps, true});
  const Exact ex(df);
  const Rational& a_root = ex.const_of({0, 0});
  DecayReport out;
  out.c2 = std::log(4.0 / 3.0) / (3.0 * lambda);

  for (int m = 1; m <= steps; ++m) {
    const auto& gm = fam.steps[static_cast<std::size_t>(m - 1)];
    const auto& up = fam.parents[static_cast<std::size_t>(m - 1)];
    for (std::size_t k = 0; k < gm.size(); ++k) {
      const bool parent_ok = m == 1 || std::find(fam.steps[static_cast<std::size_t>(m - 2)].begin(),
                                                 fam.steps[static_cast<std::size_t>(m - 2)].end(),
                                                 up[k]) != fam.steps[static_cast<std::size_t>(m - 2)].end();
      if (!parent_ok || !up[k].contains(gm[k]) || up[k] == gm[k]) out.nesting = false;
    }

    DecayRow row;
    row.m = m;
    row.t = 3.0 * m * lambda;
    const Rational t = Rational(3 * m) * Rational(lambda);
    std::size_t tail = 0;
    const auto mask = fam.mask(m);
    for (std::size_t i = 0; i < ex.f.size(); ++i) {
      const Rational dev = abs(ex.f[i] - a_root);
      tail += dev > t ? 1 : 0;
      if (!mask[i] && !(dev < t)) row.off_family = false;
    }
    row.tail = cell_measure(tail, ex.depth);
    row.family_measure = fam.measure(m);
    row.bound = 1;
    for (int k = 0; k < m; ++k) row.bound *= Rational(3, 4);
    const double exact = std::pow(0.75, m);
    row.exp_bound = std::exp(-out.c2 * row.t);
    row.identity_error = std::abs(exact - row.exp_bound) / exact;
    row.holds = row.tail <= row.bound && row.family_measure <= row.bound && row.off_family && row.identity_error <= 1e-12;
    out.holds = out.holds && row.holds;
    out.rows.push_back(row);
  }
  out.holds = out.holds && out.nesting;
  return out;
}

}  // namespace ealab
