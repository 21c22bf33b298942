#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "ealab/io.hpp"
#include "json.hpp"
#include "lab/config.hpp"
#include "lab/runner.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string data(const std::string& name) { return std::string(LAB_TEST_DATA_DIR) + "/" + name; }

int run_lab(const std::string& args) {
  const std::string cmd = std::string(LAB_BINARY) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

lab::ExperimentConfig small(const std::string& field) {
  lab::ExperimentConfig cfg;
  cfg.field = field;
  cfg.grid_depth = 7;
  cfg.max_depth = 5;
  cfg.counting_depth = 5;
  cfg.fatou_boundary_samples = 4;
  cfg.fatou_omega_samples = 2;
  cfg.classify_samples = 8;
  cfg.prop24_gen_hi = 1;
  cfg.prop24_samples = 2;
  return cfg;
}

}  // namespace

TEST_CASE("minimal config takes defaults") {
  auto cfg = lab::parse_config_text("field = coordinate_y\n");
  CHECK(cfg.k_blue == 0.5);
  CHECK(cfg.eta == 0.0);
  CHECK_FALSE(cfg.alpha.has_value());
  CHECK(lab::resolved_alpha(cfg, 0.0) == 0.5);
  CHECK(lab::resolved_alpha(cfg, 2.0) == 0.25);
}

TEST_CASE("range and parse errors name the problem") {
  try {
    lab::parse_config(data("bad_beta.cfg"));
    FAIL("expected a ConfigError");
  } catch (const lab::ConfigError& e) {
    CHECK(std::string(e.what()).find("beta") != std::string::npos);
  }
  try {
    lab::parse_config(data("unknown_key.cfg"));
    FAIL("expected a ConfigError");
  } catch (const lab::ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("epsilon") != std::string::npos);
  }
  CHECK_THROWS_AS(lab::parse_config_text("epsilons = [0.1, -1]\n"), lab::ConfigError);
  CHECK_THROWS_AS(lab::parse_config_text("{\"max_depth\": \"deep\"}"), lab::ConfigError);
  CHECK_THROWS_AS(lab::parse_config(data("missing.cfg")), std::runtime_error);
}

TEST_CASE("config round trip") {
  lab::ExperimentConfig cfg;
  cfg.domain = "linear";
  cfg.slope = {0.5};
  cfg.root_origin = {-0.5};
  cfg.root_side = 2.0;
  cfg.field = "power_alpha";
  cfg.field_alpha = 0.25;
  cfg.clip = true;
  cfg.epsilons = {0.05, 0.1, 0.2};
  cfg.depths = {6, 7};
  cfg.alpha = 0.8;
  cfg.beta = 0.3;
  cfg.eta = 0.25;
  cfg.increment = 0.2;
  cfg.seed = 123456789;
  cfg.out = "elsewhere";
  auto back = lab::parse_config_text(lab::serialize_config(cfg));
  CHECK(back == cfg);
  CHECK(lab::serialize_config(back) == lab::serialize_config(cfg));
}

TEST_CASE("approximate on the constant field") {
  auto cfg = lab::parse_config(data("constant.cfg"));
  auto res = lab::execute("approximate", cfg);
  CHECK(res.passed());
  auto doc = json::parse(res.report);
  CHECK(doc["schema"] == "1");
  const auto& run = doc["results"]["runs"][0];
  CHECK(run["sup_error"] == 0.0);
  CHECK(run["carleson"]["phi1"]["constant"] == 0.0);
  CHECK(run["carleson"]["red"]["constant"] == 0.0);
  CHECK(run["carleson"]["jump"]["constant"] == 0.0);
  CHECK(res.extra_files.count("forest.json") == 1);
}

TEST_CASE("goodlambda pipeline") {
  auto cfg = lab::parse_config(data("martingale.json"));
  auto res = lab::execute("goodlambda", cfg);
  CHECK(res.passed());
  bool found = false;
  for (const auto& t : res.tables) {
    if (t.name != "goodlambda_decay") continue;
    found = true;
    CHECK(t.rows.size() == 4);
  }
  CHECK(found);
}

TEST_CASE("classify on the paraboloid") {
  auto cfg = small("paraboloid");
  auto res = lab::execute("classify", cfg);
  auto doc = json::parse(res.report);
  CHECK(doc["results"]["prop31"] == true);
  CHECK(doc["results"]["theta_sup"].get<double>() == doctest::Approx(1.0).epsilon(0.01));
  CHECK(doc["results"]["sharp_holds"] == false);
}

TEST_CASE("verify and fatou pipelines run") {
  auto v = lab::execute("verify", small("harmonic_sinexp"));
  CHECK(v.passed());
  auto cfg = small("coordinate_y");
  cfg.clip = true;
  cfg.epsilons = {0.6};
  CHECK(lab::execute("fatou", cfg).passed());
  cfg.clip = false;
  CHECK_THROWS_AS(lab::execute("fatou", small("paraboloid")), lab::ConfigError);
}

TEST_CASE("sweeps") {
  auto cfg = small("harmonic_sinexp");
  cfg.epsilons = {};
  auto empty = lab::execute("sweep", cfg);
  REQUIRE(empty.tables.size() == 1);
  CHECK(empty.tables[0].rows.empty());
  const std::string csv = empty.tables[0].to_csv();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);

  cfg.epsilons = {0.1, 0.2};
  auto two = lab::execute("sweep", cfg);
  REQUIRE(two.tables[0].rows.size() == 2);
  CHECK(two.tables[0].rows[0][0] == "0.1");
  CHECK(two.tables[0].rows[1][0] == "0.2");
}

TEST_CASE("reports are byte-identical across runs") {
  auto cfg = small("harmonic_sinexp");
  const auto dir = fs::temp_directory_path() / "ealab_cli_determinism";
  fs::remove_all(dir);
  for (const char* cmd : {"approximate", "goodlambda"}) {
    // The output directory is part of the echoed config, so reuse it.
    cfg.out = dir.string();
    REQUIRE(lab::run(cmd, cfg, std::cerr) == lab::kOk);
    const std::string first = ealab::read_file((dir / "report.json").string());
    REQUIRE(lab::run(cmd, cfg, std::cerr) == lab::kOk);
    CHECK(first == ealab::read_file((dir / "report.json").string()));
    CHECK(fs::exists(dir / "tables"));
  }
  fs::remove_all(dir);
}

TEST_CASE("exit codes of the binary") {
  const auto out = (fs::temp_directory_path() / "ealab_cli_exit").string();
  CHECK(run_lab("approximate --config " + data("constant.cfg") + " --out " + out) == 0);
  CHECK(fs::exists(fs::path(out) / "report.json"));
  CHECK(fs::exists(fs::path(out) / "forest.json"));
  CHECK(run_lab("approximate --config " + data("bad_beta.cfg") + " --out " + out) == 2);
  CHECK(run_lab("approximate --config " + data("unknown_key.cfg") + " --out " + out) == 2);
  CHECK(run_lab("approximate --config " + data("missing.cfg") + " --out " + out) == 3);
  CHECK(run_lab("frobnicate --config " + data("constant.cfg")) == 2);
  CHECK(run_lab("goodlambda --config " + data("martingale.json") + " --out " + out + " --seed 7") == 0);
  fs::remove_all(out);
}
