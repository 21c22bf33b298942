#pragma once

#include <map>
#include <string>
#include <vector>

#include "lab/config.hpp"

namespace lab {

enum ExitCode : int { kOk = 0, kGateFailure = 1, kInvalidConfig = 2, kIoFailure = 3 };

const std::vector<std::string>& commands();

// Plain CSV table; cells are preformatted so output is byte-stable.
struct Table {
  std::string name;  // tables/<name>.csv
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const;
};

struct RunResult {
  std::string command;
  std::string report;  // report.json content
  std::map<std::string, bool> gates;
  std::vector<Table> tables;
  std::map<std::string, std::string> extra_files;  // relative path -> content

  bool passed() const;
};

// Runs a pipeline without touching the filesystem (except configured inputs).
// Throws ConfigError for parameter problems.
RunResult execute(const std::string& command, const ExperimentConfig& cfg);

// Writes report.json, tables/*.csv and extra files under `dir` atomically.
void emit_report(const RunResult& result, const std::string& dir);

// execute + emit_report with the exit-code contract; messages go to `log`.
int run(const std::string& command, const ExperimentConfig& cfg, std::ostream& log);

std::string format_number(double v);

}  // namespace lab
