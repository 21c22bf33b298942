#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "lab/config.hpp"
#include "lab/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"lab: stopping-time approximation experiments"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::string> out;
  std::optional<int> depth;
  std::optional<std::uint64_t> seed;
  for (const auto& name : lab::commands()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " pipeline");
    sub->add_option("--config", config_path, "experiment config (JSON or key = value)")->required();
    sub->add_option("--out", out, "output directory (overrides config)");
    sub->add_option("--depth", depth, "stopping-tree depth (overrides max_depth)");
    sub->add_option("--seed", seed, "random seed (overrides config)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : lab::kInvalidConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  lab::ExperimentConfig cfg;
  try {
    cfg = lab::parse_config(config_path);
    if (out) cfg.out = *out;
    if (seed) cfg.seed = *seed;
    if (depth) {
      cfg.max_depth = *depth;
      cfg.grid_depth = std::max(cfg.grid_depth, *depth + 2);
    }
    lab::validate(cfg);
  } catch (const lab::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return lab::kInvalidConfig;
  } catch (const std::exception& e) {
    std::cerr << "cannot read config: " << e.what() << "\n";
    return lab::kIoFailure;
  }
  return lab::run(command, cfg, std::cerr);
}
