#include "lab/runner.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <ostream>

#include "ealab/approximant.hpp"
#include "ealab/goodlambda.hpp"
#include "ealab/io.hpp"
#include "json.hpp"

namespace lab {

namespace {

using json = nlohmann::ordered_json;
using namespace ealab;

std::string fmt(double v) { return format_number(v); }

std::string fmt_vec(const Vec& v) {
  std::string out;
  for (int a = 0; a < v.size(); ++a) out += (a ? ";" : "") + fmt(v[a]);
  return out;
}

json vec_json(const Vec& v) {
  json out = json::array();
  for (int a = 0; a < v.size(); ++a) out.push_back(v[a]);
  return out;
}

json carleson_json(const CarlesonResult& c) {
  return {{"constant", c.constant}, {"witness_x", vec_json(c.witness_x)}, {"witness_r", c.witness_r}};
}

ForestOptions forest_options(const ExperimentConfig& cfg, double eps, int depth) {
  ForestOptions o;
  o.epsilon = eps;
  o.k_blue = cfg.k_blue;
  o.max_depth = depth;
  o.grid_depth = cfg.grid_depth;
  return o;
}

void require_epsilons(const ExperimentConfig& cfg) {
  if (cfg.epsilons.empty()) throw ConfigError("'epsilons' must not be empty for this command");
}

struct Context {
  LipschitzGraph graph;
  ScalarField field;
  RootCube root;
  double alpha;
};

Context context(const ExperimentConfig& cfg) {
  LipschitzGraph graph = make_graph(cfg);
  const double alpha = resolved_alpha(cfg, graph.lipschitz());
  if (alpha * graph.lipschitz() >= 1.0) throw ConfigError("'alpha' must be < 1/L");
  return {graph, make_field(cfg), make_root(cfg), alpha};
}

void approximate(const ExperimentConfig& cfg, RunResult& r, json& results) {
  require_epsilons(cfg);
  const Context ctx = context(cfg);
  Table t{"approximate",
          {"epsilon", "sup_error", "bound", "grid_term", "unresolved_fraction", "selected", "red_cells",
           "carleson_phi1", "carleson_red", "carleson_jump", "car1_max", "car2_max"},
          {}};
  bool bound_ok = true, finite = true, resolved = true;
  json runs = json::array();
  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
    const double eps = cfg.epsilons[i];
    StoppingForest forest = build_forest(ctx.field, ctx.graph, ctx.root, forest_options(cfg, eps, cfg.max_depth));
    red_blue_classify(forest);
    if (i == 0) r.extra_files["forest.json"] = forest_to_json(forest);
    json run{{"epsilon", eps}, {"selected", forest.selected_count()}};
    try {
      const ApproximantField approx = build_approximant(forest, ctx.field, ctx.graph);
      const CarlesonDecomposition cd = carleson_decomposition(approx, forest, ctx.graph);
      run["sup_error"] = approx.sup_error;
      run["bound"] = approx.bound;
      run["grid_term"] = approx.grid_term;
      run["witness"] = vec_json(approx.witness.ambient());
      run["unresolved_fraction"] = approx.unresolved_fraction;
      run["red_cells"] = approx.red_cells;
      run["carleson"] = {{"phi1", carleson_json(cd.c1)}, {"red", carleson_json(cd.c2)}, {"jump", carleson_json(cd.c3)}};
      run["car1_max"] = cd.car1_max;
      run["car2_max"] = cd.car2_max;
      for (double c : {cd.c1.constant, cd.c2.constant, cd.c3.constant}) finite = finite && std::isfinite(c);
      resolved = resolved && approx.unresolved_fraction < 0.01;
      t.rows.push_back({fmt(eps), fmt(approx.sup_error), fmt(approx.bound), fmt(approx.grid_term),
                        fmt(approx.unresolved_fraction), std::to_string(forest.selected_count()),
                        std::to_string(approx.red_cells), fmt(cd.c1.constant), fmt(cd.c2.constant),
                        fmt(cd.c3.constant), fmt(cd.car1_max), fmt(cd.car2_max)});
    } catch (const ConstructionError& e) {
      bound_ok = false;
      run["construction_error"] = e.what();
      run["witness"] = vec_json(e.witness().ambient());
    }
    runs.push_back(std::move(run));
  }
  results["runs"] = std::move(runs);
  r.gates["approximation_bound"] = bound_ok;
  r.gates["carleson_finite"] = finite;
  r.gates["unresolved_below_1pct"] = resolved;
  r.tables.push_back(std::move(t));
}

void verify(const ExperimentConfig& cfg, RunResult& r, json& results) {
  require_epsilons(cfg);
  const Context ctx = context(cfg);
  Table sums{"stopping_sums", {"epsilon", "g_nodes", "s1_ratio_max", "s2_ratio_max", "lemma22_ratio_max"}, {}};
  bool partition = true, lemma_finite = true;
  json runs = json::array();
  for (const double eps : cfg.epsilons) {
    StoppingForest forest = build_forest(ctx.field, ctx.graph, ctx.root, forest_options(cfg, eps, cfg.max_depth));
    red_blue_classify(forest);
    // Every cell has exactly one owner, and owners are G nodes.
    std::vector<std::size_t> cells_per_node(forest.nodes().size(), 0);
    for (const std::int64_t o : forest.cell_owner()) ++cells_per_node[static_cast<std::size_t>(o)];
    std::size_t covered = 0;
    for (std::size_t id = 0; id < cells_per_node.size(); ++id) {
      if (cells_per_node[id] > 0 && !forest.nodes()[id].in_g) partition = false;
      covered += cells_per_node[id];
    }
    partition = partition && covered == static_cast<std::size_t>(forest.grid().cells());

    const StoppingSums ss = stopping_sums(forest);
    const Lemma22Report lem = lemma22_check(forest, ctx.field, ctx.graph, ctx.alpha);
    lemma_finite = lemma_finite && !lem.infinite;
    runs.push_back({{"epsilon", eps},
                    {"g_nodes", ss.rows.size()},
                    {"s1_ratio_max", ss.r1_max},
                    {"s2_ratio_max", ss.r2_max},
                    {"lemma22_ratio_max", lem.ratio_max},
                    {"lemma22_infinite", lem.infinite},
                    {"selected_per_generation", forest.selected_per_generation()}});
    sums.rows.push_back({fmt(eps), std::to_string(ss.rows.size()), fmt(ss.r1_max), fmt(ss.r2_max), fmt(lem.ratio_max)});
  }
  Prop24Options po;
  po.gen_hi = cfg.prop24_gen_hi;
  po.samples_per_cube = cfg.prop24_samples;
  const Prop24Report prop = prop24_check(ctx.field, ctx.graph, ctx.root, ctx.alpha, po);
  Table p24{"prop24", {"m", "j", "ratio"}, {}};
  for (const auto& row : prop.rows) {
    std::string j;
    for (int a = 0; a < ctx.graph.dim(); ++a) j += (a ? ";" : "") + std::to_string(row.j[static_cast<std::size_t>(a)]);
    p24.rows.push_back({std::to_string(row.m), j, fmt(row.ratio)});
  }
  results["runs"] = std::move(runs);
  results["prop24"] = {{"max_ratio", prop.max_ratio}, {"min_ratio", prop.min_ratio}, {"spread", prop.spread}};
  r.gates["partition_exact"] = partition;
  r.gates["lemma22_finite"] = lemma_finite;
  r.gates["prop24_finite"] = std::isfinite(prop.max_ratio);
  r.tables.push_back(std::move(sums));
  r.tables.push_back(std::move(p24));
}

void classify_cmd(const ExperimentConfig& cfg, RunResult& r, json& results) {
  const Context ctx = context(cfg);
  const int n = ctx.graph.dim();
  AdaptedBox box{ctx.root.origin, ctx.root.origin, 0.0, ctx.root.side};
  for (int a = 0; a < n; ++a) box.hi[a] += ctx.root.side;
  const SampleSet samples = sample_box(ctx.graph, box, cfg.classify_samples);
  const auto balls = default_balls(ctx.graph, ctx.root, cfg.eta, 6);
  ClassifyOptions opts;
  opts.theta = cfg.theta;
  opts.gradient_alpha = cfg.gradient_alpha;
  opts.power_alpha = cfg.power_alpha;
  opts.star_C = cfg.star_C;
  opts.balls.eta = cfg.eta;
  const ClassReport rep = classify(ctx.field, ctx.graph, samples, balls, opts);
  results["samples"] = rep.samples;
  results["theta_sup"] = rep.theta_sup();
  results["sharp_holds"] = rep.sharp.holds;
  if (rep.star) results["star_ratio_sup"] = rep.star->ratio_sup;
  if (rep.morrey) results["morrey_ratio_sup"] = rep.morrey->ratio_sup;
  results["prop31"] = rep.prop31;
  results["prop32"] = rep.prop32;
  results["prop33_log"] = rep.prop33_log;
  results["prop33_inverse"] = rep.prop33_inverse;
  results["prop33_power"] = rep.prop33_power;
  results["implied_theta"] = rep.implied_theta;
  results["nonpositive_samples"] = rep.nonpositive_samples;
  r.gates["ratios_defined"] = !std::isnan(rep.theta_sup()) && (!rep.star || !std::isnan(rep.star->ratio_sup));
  r.tables.push_back({"classify",
                      {"field", "theta_sup", "sharp", "star_ratio_sup", "prop31", "prop32", "prop33_power", "implied_theta"},
                      {{ctx.field.name, fmt(rep.theta_sup()), rep.sharp.holds ? "1" : "0",
                        rep.star ? fmt(rep.star->ratio_sup) : "", rep.prop31 ? "1" : "0", rep.prop32 ? "1" : "0",
                        rep.prop33_power ? "1" : "0", fmt(rep.implied_theta)}}});
}

void fatou_cmd(const ExperimentConfig& cfg, RunResult& r, json& results) {
  require_epsilons(cfg);
  if (cfg.radii.empty()) throw ConfigError("'radii' must not be empty for fatou");
  const Context ctx = context(cfg);
  if (!ctx.field.sup_norm_hint || *ctx.field.sup_norm_hint > 1.0) {
    throw ConfigError("'clip' must be true: fatou needs |u| <= 1");
  }
  Vec center = ctx.root.origin;
  for (int a = 0; a < center.size(); ++a) center[a] += 0.5 * ctx.root.side;
  double rmax = 0.0;
  for (double rad : cfg.radii) rmax = std::max(rmax, rad);
  FatouOptions fo;
  fo.depth = cfg.counting_depth;
  fo.boundary_samples = cfg.fatou_boundary_samples;
  fo.omega_samples = cfg.fatou_omega_samples;
  Table summary{"fatou", {"epsilon", "sup", "witness_omega", "witness_r", "n_center"}, {}};
  Table rows{"fatou_rows", {"epsilon", "omega", "r", "average"}, {}};
  bool finite = true;
  json runs = json::array();
  for (const double eps : cfg.epsilons) {
    const CountingParams params{rmax, eps, cfg.beta, ctx.alpha};
    const FatouResult fr = fatou_average(ctx.field, ctx.graph, params, ctx.root, cfg.radii, fo);
    const CountingResult nc = counting_function(ctx.field, ctx.graph, center, params, cfg.counting_depth);
    finite = finite && std::isfinite(fr.sup);
    runs.push_back({{"epsilon", eps},
                    {"sup", fr.sup},
                    {"witness_omega", vec_json(fr.witness_omega)},
                    {"witness_r", fr.witness_r},
                    {"n_center", nc.count}});
    summary.rows.push_back({fmt(eps), fmt(fr.sup), fmt_vec(fr.witness_omega), fmt(fr.witness_r), std::to_string(nc.count)});
    for (const auto& row : fr.rows) rows.rows.push_back({fmt(eps), fmt_vec(row.omega), fmt(row.r), fmt(row.average)});
  }
  results["runs"] = std::move(runs);
  r.gates["fatou_finite"] = finite;
  r.tables.push_back(std::move(summary));
  r.tables.push_back(std::move(rows));
}

void goodlambda_cmd(const ExperimentConfig& cfg, RunResult& r, json& results) {
  const double lambda = cfg.lambda;
  const double inc = cfg.increment.value_or(lambda / 4.0);
  Table t{"goodlambda_decay",
          {"seed", "m", "t", "tail", "family_measure", "bound", "exp_bound", "identity_error", "holds"},
          {}};
  bool any = false, decay_ok = true, props_ok = true;
  json seeds = json::array();
  for (int s = 0; s < cfg.gl_seeds; ++s) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(s);
    const DyadicFunction df = synth_martingale(cfg.gl_depth, inc, seed);
    if (s == 0) r.extra_files["martingale.json"] = dyadic_to_json(df);
    const HypothesisReport hyp = check_hypothesis(df, lambda, 0.25);
    json entry{{"seed", seed}, {"hypothesis", hyp.holds}, {"worst_ratio", fraction_string(hyp.worst_ratio)}};
    if (hyp.holds) {
      any = true;
      const StoppingFamilies fam = build_families(df, lambda, {cfg.gl_steps, true});
      const PropertyReport props = verify_properties(fam, df, lambda);
      const DecayReport decay = decay_check(df, lambda, cfg.gl_steps);
      props_ok = props_ok && props.all();
      decay_ok = decay_ok && decay.holds;
      json rows = json::array();
      for (const auto& row : decay.rows) {
        rows.push_back({{"m", row.m},
                        {"t", row.t},
                        {"tail", fraction_string(row.tail)},
                        {"family_measure", fraction_string(row.family_measure)},
                        {"bound", fraction_string(row.bound)},
                        {"exp_bound", row.exp_bound},
                        {"identity_error", row.identity_error},
                        {"holds", row.holds}});
        t.rows.push_back({std::to_string(seed), std::to_string(row.m), fmt(row.t), fraction_string(row.tail),
                          fraction_string(row.family_measure), fraction_string(row.bound), fmt(row.exp_bound),
                          fmt(row.identity_error), row.holds ? "1" : "0"});
      }
      entry["c2"] = decay.c2;
      entry["nesting"] = decay.nesting;
      entry["properties"] = props.all();
      entry["g1_measure"] = fraction_string(props.g1_measure);
      entry["decay"] = std::move(rows);
    }
    seeds.push_back(std::move(entry));
  }
  results["lambda"] = lambda;
  results["increment"] = inc;
  results["seeds"] = std::move(seeds);
  r.gates["hypothesis_any"] = any;
  r.gates["properties"] = props_ok;
  r.gates["decay"] = decay_ok;
  r.tables.push_back(std::move(t));
}

void sweep(const ExperimentConfig& cfg, RunResult& r, json& results) {
  const Context ctx = context(cfg);
  const std::vector<int> depths = cfg.depths.empty() ? std::vector<int>{cfg.max_depth} : cfg.depths;
  Table t{"sweep",
          {"epsilon", "depth", "sup_error", "bound", "selected", "unresolved_fraction", "s1_ratio_max", "s2_ratio_max"},
          {}};
  bool bound_ok = true;
  json runs = json::array();
  for (const double eps : cfg.epsilons) {
    for (const int depth : depths) {
      StoppingForest forest = build_forest(ctx.field, ctx.graph, ctx.root, forest_options(cfg, eps, depth));
      red_blue_classify(forest);
      const StoppingSums ss = stopping_sums(forest);
      json run{{"epsilon", eps}, {"depth", depth}, {"selected", forest.selected_count()}};
      try {
        const ApproximantField approx = build_approximant(forest, ctx.field, ctx.graph);
        run["sup_error"] = approx.sup_error;
        run["bound"] = approx.bound;
        t.rows.push_back({fmt(eps), std::to_string(depth), fmt(approx.sup_error), fmt(approx.bound),
                          std::to_string(forest.selected_count()), fmt(forest.unresolved_fraction()), fmt(ss.r1_max),
                          fmt(ss.r2_max)});
      } catch (const ConstructionError& e) {
        bound_ok = false;
        run["construction_error"] = e.what();
      }
      run["s1_ratio_max"] = ss.r1_max;
      run["s2_ratio_max"] = ss.r2_max;
      runs.push_back(std::move(run));
    }
  }
  results["runs"] = std::move(runs);
  r.gates["approximation_bound"] = bound_ok;
  r.tables.push_back(std::move(t));
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> list{"approximate", "verify", "classify", "fatou", "goodlambda", "sweep"};
  return list;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string Table::to_csv() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += '\n';
  };
  line(header);
  for (const auto& row : rows) line(row);
  return out;
}

bool RunResult::passed() const {
  for (const auto& [name, ok] : gates) {
    if (!ok) return false;
  }
  return true;
}

RunResult execute(const std::string& command, const ExperimentConfig& cfg) {
  validate(cfg);
  RunResult r;
  r.command = command;
  json results = json::object();
  if (command == "approximate") approximate(cfg, r, results);
  else if (command == "verify") verify(cfg, r, results);
  else if (command == "classify") classify_cmd(cfg, r, results);
  else if (command == "fatou") fatou_cmd(cfg, r, results);
  else if (command == "goodlambda") goodlambda_cmd(cfg, r, results);
  else if (command == "sweep") sweep(cfg, r, results);
  else throw ConfigError("unknown command '" + command + "'");

  json doc;
  doc["schema"] = "1";
  doc["command"] = command;
  doc["config"] = json::parse(serialize_config(cfg));
  doc["results"] = std::move(results);
  json gates = json::object();
  for (const auto& [name, ok] : r.gates) gates[name] = ok;
  doc["gates"] = std::move(gates);
  doc["passed"] = r.passed();
  json tables = json::array();
  for (const auto& t : r.tables) tables.push_back("tables/" + t.name + ".csv");
  doc["tables"] = std::move(tables);
  r.report = doc.dump(2) + "\n";
  return r;
}

void emit_report(const RunResult& result, const std::string& dir) {
  const std::filesystem::path base(dir);
  write_file_atomic((base / "report.json").string(), result.report);
  for (const auto& t : result.tables) write_file_atomic((base / "tables" / (t.name + ".csv")).string(), t.to_csv());
  for (const auto& [rel, content] : result.extra_files) write_file_atomic((base / rel).string(), content);
}

int run(const std::string& command, const ExperimentConfig& cfg, std::ostream& log) {
  RunResult result;
  try {
    result = execute(command, cfg);
  } catch (const ConfigError& e) {
    log << "invalid config: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const std::logic_error& e) {
    log << "invalid parameters: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const std::runtime_error& e) {
    log << "I/O failure: " << e.what() << "\n";
    return kIoFailure;
  }
  try {
    emit_report(result, cfg.out);
  } catch (const std::exception& e) {
    log << "I/O failure: " << e.what() << "\n";
    return kIoFailure;
  }
  for (const auto& [name, ok] : result.gates) log << (ok ? "ok   " : "FAIL ") << name << "\n";
  return result.passed() ? kOk : kGateFailure;
}

}  // namespace lab
