#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dpen/dynamics.hpp"
#include "dpen/problem.hpp"

namespace dpen {

/// Bad key, bad value or failed validation; the message names the key.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// One sparse row of a custom linear problem: sum_k coef_k x_{agent_k} <= bound (or = bound).
struct ConstraintRow {
  std::string name;
  bool equality = false;
  AgentId owner = 0;
  std::vector<std::pair<AgentId, double>> terms;
  double bound = 0.0;
};

struct ProblemSpec {
  /// Preset name or "custom".
  std::string name;
  std::uint64_t seed = 1;
  // Custom problems only.
  int n = 0;
  /// "quadratic": min sum (x_i - t_i)^2. "log": max sum (i+1) log x_i.
  std::string objective = "quadratic";
  std::vector<double> targets;
  double lower = -10.0;
  double upper = 10.0;
  std::vector<ConstraintRow> rows;
};

struct ExperimentConfig {
  ProblemSpec problem;
  /// "default" (the preset's own), "ring", "path", "complete" or "edges".
  std::string graph = "default";
  std::vector<std::pair<AgentId, AgentId>> edges;
  RunConfig run;
  /// "default", "const:<value>" or a comma-separated vector.
  std::string x0 = "default";
  std::string csv_path;
  std::string json_path;
};

/// Parses the flat `key = value` format ('#' starts a comment). Unknown keys,
/// duplicates and malformed values throw ConfigError; defaults fill the rest.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

/// Applies one key as if it appeared in the file; used for command-line overrides.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Checks cross-key constraints (required keys, run parameters).
void validate_config(const ExperimentConfig& cfg);

/// Canonical key/value pairs; feeding them back through set_config_value
/// reproduces the config.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& cfg);

/// The problem, graph and initial point a config describes.
Instance build_instance(const ExperimentConfig& cfg);

/// Every key the parser accepts; custom constraint rows use "ineq.<name>" / "eq.<name>".
std::vector<std::string> config_keys();

}  // namespace dpen
