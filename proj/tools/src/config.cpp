#include "lab/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "ealab/io.hpp"
#include "json.hpp"

namespace lab {

namespace {

using json = nlohmann::ordered_json;

struct Key {
  std::function<void(ExperimentConfig&, const json&)> read;
  std::function<void(const ExperimentConfig&, json&)> write;  // sets doc[name] when present
};

template <typename T>
Key field(T ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const json& v) { c.*member = v.get<T>(); },
          [member](const ExperimentConfig& c, json& v) { v = c.*member; }};
}

template <typename T>
Key optional_field(std::optional<T> ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const json& v) { c.*member = v.get<T>(); },
          [member](const ExperimentConfig& c, json& v) {
            if (c.*member) v = *(c.*member);
          }};
}

// Declaration order is the canonical serialization order.
const std::vector<std::pair<std::string, Key>>& keys() {
  static const std::vector<std::pair<std::string, Key>> table = {
      {"domain", field(&ExperimentConfig::domain)},
      {"n", field(&ExperimentConfig::n)},
      {"slope", field(&ExperimentConfig::slope)},
      {"boundary_file", field(&ExperimentConfig::boundary_file)},
      {"root_origin", field(&ExperimentConfig::root_origin)},
      {"root_side", field(&ExperimentConfig::root_side)},
      {"field", field(&ExperimentConfig::field)},
      {"field_c", field(&ExperimentConfig::field_c)},
      {"field_alpha", field(&ExperimentConfig::field_alpha)},
      {"field_file", field(&ExperimentConfig::field_file)},
      {"clip", field(&ExperimentConfig::clip)},
      {"grid_depth", field(&ExperimentConfig::grid_depth)},
      {"max_depth", field(&ExperimentConfig::max_depth)},
      {"epsilons", field(&ExperimentConfig::epsilons)},
      {"depths", field(&ExperimentConfig::depths)},
      {"k_blue", field(&ExperimentConfig::k_blue)},
      {"alpha", optional_field(&ExperimentConfig::alpha)},
      {"beta", field(&ExperimentConfig::beta)},
      {"eta", field(&ExperimentConfig::eta)},
      {"theta", field(&ExperimentConfig::theta)},
      {"radii", field(&ExperimentConfig::radii)},
      {"counting_depth", field(&ExperimentConfig::counting_depth)},
      {"fatou_boundary_samples", field(&ExperimentConfig::fatou_boundary_samples)},
      {"fatou_omega_samples", field(&ExperimentConfig::fatou_omega_samples)},
      {"classify_samples", field(&ExperimentConfig::classify_samples)},
      {"star_C", field(&ExperimentConfig::star_C)},
      {"power_alpha", field(&ExperimentConfig::power_alpha)},
      {"gradient_alpha", field(&ExperimentConfig::gradient_alpha)},
      {"prop24_gen_hi", field(&ExperimentConfig::prop24_gen_hi)},
      {"prop24_samples", field(&ExperimentConfig::prop24_samples)},
      {"lambda", field(&ExperimentConfig::lambda)},
      {"increment", optional_field(&ExperimentConfig::increment)},
      {"gl_depth", field(&ExperimentConfig::gl_depth)},
      {"gl_steps", field(&ExperimentConfig::gl_steps)},
      {"gl_seeds", field(&ExperimentConfig::gl_seeds)},
      {"seed", field(&ExperimentConfig::seed)},
      {"out", field(&ExperimentConfig::out)},
  };
  return table;
}

const Key* find_key(const std::string& name) {
  for (const auto& [k, v] : keys()) {
    if (k == name) return &v;
  }
  return nullptr;
}

std::string at_line(int line) { return line > 0 ? "line " + std::to_string(line) + ": " : ""; }

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

int line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// One `key = value` line; values are JSON scalars/arrays, or bare words
// taken as strings.
json parse_kv(const std::string& text, std::map<std::string, int>& lines) {
  json doc = json::object();
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') quoted = !quoted;
      if (s[i] == '#' && !quoted) {
        s.resize(i);
        break;
      }
    }
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(at_line(line) + "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError(at_line(line) + "missing key");
    if (value.empty()) throw ConfigError(at_line(line) + "missing value for '" + key + "'");
    if (doc.contains(key)) throw ConfigError(at_line(line) + "duplicate key '" + key + "'");
    json v = json::parse(value, nullptr, false);
    if (v.is_discarded()) {
      if (value.find_first_of("[]{}\",") != std::string::npos) {
        throw ConfigError(at_line(line) + "malformed value for '" + key + "'");
      }
      v = value;
    }
    doc[key] = std::move(v);
    lines[key] = line;
  }
  return doc;
}

ealab::Vec to_vec(const std::vector<double>& v) {
  ealab::Vec out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
  return out;
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("'" + key + "' " + what);
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  std::map<std::string, int> lines;
  json doc;
  const auto first = text.find_first_not_of(" \t\r\n");
  const bool is_json = first != std::string::npos && text[first] == '{';
  if (is_json) {
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(at_line(line_of_offset(text, e.byte)) + "JSON parse error: " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [k, v] : doc.items()) lines[k] = line_of_key(text, k);
  } else {
    doc = parse_kv(text, lines);
  }

  ExperimentConfig cfg;
  for (const auto& [k, v] : doc.items()) {
    const Key* key = find_key(k);
    if (!key) throw ConfigError(at_line(lines[k]) + "unknown key '" + k + "'");
    try {
      key->read(cfg, v);
    } catch (const json::exception&) {
      throw ConfigError(at_line(lines[k]) + "wrong type for '" + k + "'");
    }
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) { return parse_config_text(ealab::read_file(path)); }

std::string serialize_config(const ExperimentConfig& cfg) {
  json doc = json::object();
  for (const auto& [name, key] : keys()) {
    json v;
    key.write(cfg, v);
    if (!v.is_null()) doc[name] = std::move(v);
  }
  return doc.dump(2);
}

void validate(const ExperimentConfig& c) {
  static const std::vector<std::string> domains{"flat", "linear", "abs_cone", "csv"};
  require(std::find(domains.begin(), domains.end(), c.domain) != domains.end(), "domain",
          "must be one of flat, linear, abs_cone, csv");
  require(c.n >= 1 && c.n <= 3, "n", "must lie in [1, 3]");
  if (c.domain == "linear") require(static_cast<int>(c.slope.size()) == c.n, "slope", "must have n entries");
  if (c.domain == "csv") require(!c.boundary_file.empty(), "boundary_file", "is required for domain csv");
  require(c.root_origin.empty() || static_cast<int>(c.root_origin.size()) == c.n, "root_origin", "must have n entries");
  require(c.root_side > 0.0, "root_side", "must be > 0");
  const auto& names = ealab::builtin_field_names();
  require(std::find(names.begin(), names.end(), c.field) != names.end(), "field", "is not a builtin field");
  if (c.field == "custom") require(!c.field_file.empty(), "field_file", "is required for field custom");
  require(c.max_depth >= 1, "max_depth", "must be >= 1");
  require(c.grid_depth >= c.max_depth + 2, "grid_depth", "must be >= max_depth + 2");
  require(c.grid_depth <= 14 && c.n * (c.grid_depth + 1) <= 24, "grid_depth", "exceeds the cell budget");
  for (double e : c.epsilons) require(e > 0.0 && std::isfinite(e), "epsilons", "entries must be > 0");
  for (int d : c.depths) require(d >= 1 && d + 2 <= c.grid_depth, "depths", "entries must lie in [1, grid_depth - 2]");
  require(c.k_blue > 0.0, "k_blue", "must be > 0");
  if (c.alpha) require(*c.alpha > 0.0, "alpha", "must be > 0");
  require(c.beta > 0.0 && c.beta < 1.0, "beta", "must lie in (0, 1)");
  require(c.eta >= 0.0 && c.eta < 1.0, "eta", "must lie in [0, 1)");
  require(c.theta > 0.0 && c.theta < 1.0, "theta", "must lie in (0, 1)");
  for (double r : c.radii) require(r > 0.0, "radii", "entries must be > 0");
  require(c.counting_depth >= 2 && c.counting_depth <= 14, "counting_depth", "must lie in [2, 14]");
  require(c.fatou_boundary_samples >= 1, "fatou_boundary_samples", "must be >= 1");
  require(c.fatou_omega_samples >= 1, "fatou_omega_samples", "must be >= 1");
  require(c.classify_samples >= 2, "classify_samples", "must be >= 2");
  require(c.star_C > 0.0, "star_C", "must be > 0");
  require(c.power_alpha > 0.0 && c.power_alpha < 1.0, "power_alpha", "must lie in (0, 1)");
  require(c.gradient_alpha > 0.0, "gradient_alpha", "must be > 0");
  require(c.prop24_gen_hi >= 0 && c.prop24_gen_hi <= 8, "prop24_gen_hi", "must lie in [0, 8]");
  require(c.prop24_samples >= 1, "prop24_samples", "must be >= 1");
  require(c.lambda > 0.0, "lambda", "must be > 0");
  if (c.increment) require(std::isfinite(*c.increment), "increment", "must be finite");
  require(c.gl_depth >= 0 && c.gl_depth <= 20, "gl_depth", "must lie in [0, 20]");
  require(c.gl_steps >= 1, "gl_steps", "must be >= 1");
  require(c.gl_seeds >= 1, "gl_seeds", "must be >= 1");
  require(!c.out.empty(), "out", "must not be empty");
  if (c.alpha && c.domain != "csv") {
    const double L = make_graph(c).lipschitz();
    require(*c.alpha * L < 1.0, "alpha", "must be < 1/L");
  }
}

ealab::LipschitzGraph make_graph(const ExperimentConfig& c) {
  if (c.domain == "linear") return ealab::LipschitzGraph::linear(to_vec(c.slope));
  if (c.domain == "abs_cone") return ealab::LipschitzGraph::abs_cone(c.n);
  if (c.domain == "csv") {
    auto g = ealab::LipschitzGraph::from_csv(c.boundary_file);
    if (g.dim() != c.n) throw ConfigError("'boundary_file' dimension differs from n");
    return g;
  }
  return ealab::LipschitzGraph::flat(c.n);
}

ealab::ScalarField make_field(const ExperimentConfig& c) {
  ealab::FieldParams p;
  p.c = c.field_c;
  p.alpha = c.field_alpha;
  p.file = c.field_file;
  p.clip = c.clip;
  return ealab::builtin_field(c.field, c.n, p);
}

ealab::RootCube make_root(const ExperimentConfig& c) {
  return {c.root_origin.empty() ? ealab::Vec(c.n, 0.0) : to_vec(c.root_origin), c.root_side};
}

double resolved_alpha(const ExperimentConfig& c, double lipschitz) {
  return c.alpha ? *c.alpha : 0.5 / std::max(lipschitz, 1.0);
}

}  // namespace lab
