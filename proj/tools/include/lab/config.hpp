#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ealab/fields.hpp"
#include "ealab/geometry.hpp"

namespace lab {

// Invalid configuration: parse errors (with line) and range violations (with key).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  // domain
  std::string domain = "flat";  // flat | linear | abs_cone | csv
  int n = 1;
  std::vector<double> slope;    // linear
  std::string boundary_file;    // csv
  std::vector<double> root_origin;  // default: zeros
  double root_side = 1.0;

  // field
  std::string field = "harmonic_sinexp";
  double field_c = 1.0;
  double field_alpha = 0.5;
  std::string field_file;
  bool clip = false;

  // construction
  int grid_depth = 10;
  int max_depth = 8;
  std::vector<double> epsilons{0.1};
  std::vector<int> depths;  // sweep; default {max_depth}
  double k_blue = 0.5;
  std::optional<double> alpha;  // default 0.5 / max(L, 1)
  double beta = 0.5;
  double eta = 0.0;
  double theta = 0.5;
  std::vector<double> radii{0.25, 0.5, 0.75, 0.99};

  // fatou / counting
  int counting_depth = 8;
  int fatou_boundary_samples = 32;
  int fatou_omega_samples = 5;

  // classify
  int classify_samples = 16;
  double star_C = 10.0;
  double power_alpha = 0.5;
  double gradient_alpha = 1.0;

  // verify
  int prop24_gen_hi = 3;
  int prop24_samples = 4;

  // goodlambda
  double lambda = 1.0;
  std::optional<double> increment;  // default lambda / 4
  int gl_depth = 8;
  int gl_steps = 4;
  int gl_seeds = 1;

  std::uint64_t seed = 0;
  std::string out = "lab-out";

  bool operator==(const ExperimentConfig&) const = default;
};

// JSON when the first non-blank character is '{', otherwise `key = value`
// lines with '#' comments, quoted strings and [a, b] lists.
ExperimentConfig parse_config_text(const std::string& text);
// Throws ConfigError for parse/range problems, std::runtime_error for I/O.
ExperimentConfig parse_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);  // canonical JSON

// Range checks that need no files; names the offending key.
void validate(const ExperimentConfig& cfg);

ealab::LipschitzGraph make_graph(const ExperimentConfig& cfg);
ealab::ScalarField make_field(const ExperimentConfig& cfg);
ealab::RootCube make_root(const ExperimentConfig& cfg);
// Aperture used by cone quantities: explicit alpha, else 0.5 / max(L, 1).
double resolved_alpha(const ExperimentConfig& cfg, double lipschitz);

}  // namespace lab
