#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "check.hpp"
#include "dpen/config.hpp"
#include "dpen/dynamics.hpp"
#include "dpen/output.hpp"

using namespace dpen;
namespace fs = std::filesystem;

namespace {

constexpr int kConfigError = 2;
constexpr int kDivergence = 3;
constexpr int kCheckFailure = 4;

/// Relative output paths land under $DPEN_OUTPUT_DIR when it is set.
fs::path output_path(const std::string& path) {
  const char* dir = std::getenv("DPEN_OUTPUT_DIR");
  fs::path p(path);
  if (dir != nullptr && *dir != '\0' && p.is_relative()) p = fs::path(dir) / p;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

struct RunArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::vector<std::pair<std::string, std::string>> flags;
};

/// Config file, then shortcut flags, then --set overrides; empty on a config error.
std::optional<Instance> assemble_config(const RunArgs& args, ExperimentConfig& cfg) {
  try {
    if (!args.config_path.empty()) cfg = load_config(args.config_path);
    for (const auto& [key, value] : args.flags) set_config_value(cfg, key, value);
    for (const std::string& item : args.overrides) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + item + "'");
      set_config_value(cfg, item.substr(0, eq), item.substr(eq + 1));
    }
    validate_config(cfg);
    return build_instance(cfg);
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return std::nullopt;
  }
}

int cmd_run(const RunArgs& args) {
  ExperimentConfig cfg;
  const std::optional<Instance> built = assemble_config(args, cfg);
  if (!built) return kConfigError;
  const Instance& inst = *built;

  TrajectoryLog log;
  try {
    log = run_experiment(cfg.run, inst.problem, inst.graph, inst.x0);
  } catch (const Divergence& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kDivergence;
  }

  if (cfg.csv_path.empty()) {
    write_csv(std::cout, log);
  } else {
    const fs::path path = output_path(cfg.csv_path);
    std::ofstream out = open_output(path);
    write_csv(out, log);
    std::cerr << "wrote " << path.string() << '\n';
  }
  if (!cfg.json_path.empty()) {
    const fs::path path = output_path(cfg.json_path);
    std::ofstream out = open_output(path);
    out << run_metadata(cfg, inst, log).dump(2) << '\n';
    std::cerr << "wrote " << path.string() << '\n';
  }

  const LogRow& last = log.rows.back();
  std::cerr << to_string(cfg.run.algorithm) << " on " << inst.problem.name() << ": " << log.steps
            << " steps, f = " << last.f << ", max g = " << last.max_g << ", |grad f_eps| = "
            << last.grad_norm << '\n';
  if (log.steps_outside_domain > 0) {
    std::cerr << "warning: x outside D for " << log.steps_outside_domain << " steps\n";
  }
  if (log.halted) {
    std::cerr << "halted: " << log.halt_reason << '\n';
    return kDivergence;
  }
  return 0;
}

/// Every optimizer on the same config; prints final objectives best first.
int cmd_compare(const RunArgs& args) {
  ExperimentConfig cfg;
  const std::optional<Instance> built = assemble_config(args, cfg);
  if (!built) return kConfigError;
  const Instance& inst = *built;

  struct Result {
    Algorithm algorithm;
    TrajectoryLog log;
  };
  std::vector<Result> results;
  for (Algorithm a : {Algorithm::NesterovCentral, Algorithm::NesterovDistributed, Algorithm::CentralizedGd,
                      Algorithm::DistributedGd, Algorithm::SaddlePoint}) {
    RunConfig run = cfg.run;
    run.algorithm = a;
    try {
      results.push_back({a, run_experiment(run, inst.problem, inst.graph, inst.x0)});
    } catch (const Divergence& e) {
      std::cerr << to_string(a) << ": divergence: " << e.what() << '\n';
      return kDivergence;
    }
  }
  const bool maximize = inst.problem.sense() == Sense::Maximize;
  std::stable_sort(results.begin(), results.end(), [&](const Result& a, const Result& b) {
    const double fa = a.log.rows.back().f, fb = b.log.rows.back().f;
    return maximize ? fa > fb : fa < fb;
  });

  std::cout << inst.problem.name() << ", " << cfg.run.horizon << " steps, " << (maximize ? "maximize" : "minimize")
            << '\n';
  bool halted = false;
  char line[160];
  std::snprintf(line, sizeof line, "%-22s %16s %12s %12s\n", "algorithm", "final f", "final max g",
                "max g seen");
  std::cout << line;
  for (const Result& r : results) {
    const LogRow& last = r.log.rows.back();
    std::snprintf(line, sizeof line, "%-22s %16.8g %12.4g %12.4g%s\n", to_string(r.algorithm).c_str(), last.f,
                  last.max_g, r.log.max_g_seen, r.log.halted ? "  (halted)" : "");
    std::cout << line;
    halted = halted || r.log.halted;
  }
  return halted ? kDivergence : 0;
}

int cmd_presets() {
  for (const std::string& name : preset_names()) {
    const Instance inst = make_preset(name);
    const Problem& pr = inst.problem;
    std::cout << name << ": n=" << pr.n() << " m=" << pr.m() << " p=" << pr.p()
              << " edges=" << inst.graph.edges().size()
              << (pr.sense() == Sense::Maximize ? " (maximize)" : " (minimize)") << '\n';
  }
  return 0;
}

int cmd_check(const std::string& preset) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), preset) == names.end()) {
    std::string known;
    for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
    std::cerr << "unknown preset '" << preset << "' (known: " << known << ")\n";
    return kConfigError;
  }
  return run_checks(preset, std::cout) ? 0 : kCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed optimization with exact penalty functions"};
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "Run an experiment from a config file");
  run->add_option("config", run_args.config_path, "Config file (key = value lines)");
  run->add_option("-s,--set", run_args.overrides, "Override a config key (key=value), repeatable");
  const std::vector<std::pair<std::string, std::string>> shortcuts{
      {"--problem", "problem"}, {"--algorithm", "algorithm"}, {"--horizon", "horizon"},
      {"--tau", "tau"},         {"--dt", "dt"},               {"--beta", "beta"},
      {"--seed", "seed"},       {"--epsilon", "epsilon"},     {"--stride", "log.stride"},
      {"--csv", "output.csv"},  {"--json", "output.json"},    {"--x0", "x0"},
  };
  std::vector<std::string> shortcut_values(shortcuts.size());
  for (std::size_t k = 0; k < shortcuts.size(); ++k) {
    run->add_option(shortcuts[k].first, shortcut_values[k], "Sets config key '" + shortcuts[k].second + "'");
  }

  std::string preset;
  CLI::App* check = app.add_subcommand("check", "Run oracle checks on a preset");
  check->add_option("preset", preset, "Preset name")->required();

  RunArgs compare_args;
  CLI::App* compare = app.add_subcommand("compare", "Run every optimizer on one config and rank them");
  compare->add_option("config", compare_args.config_path, "Config file (key = value lines)");
  compare->add_option("-s,--set", compare_args.overrides, "Override a config key (key=value), repeatable");
  std::vector<std::string> compare_values(shortcuts.size());
  for (std::size_t k = 0; k < shortcuts.size(); ++k) {
    compare->add_option(shortcuts[k].first, compare_values[k], "Sets config key '" + shortcuts[k].second + "'");
  }

  app.add_subcommand("presets", "List the built-in problems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (run->parsed()) {
      for (std::size_t k = 0; k < shortcuts.size(); ++k) {
        if (run->count(shortcuts[k].first) > 0) run_args.flags.emplace_back(shortcuts[k].second, shortcut_values[k]);
      }
      return cmd_run(run_args);
    }
    if (compare->parsed()) {
      for (std::size_t k = 0; k < shortcuts.size(); ++k) {
        if (compare->count(shortcuts[k].first) > 0) compare_args.flags.emplace_back(shortcuts[k].second, compare_values[k]);
      }
      return cmd_compare(compare_args);
    }
    if (check->parsed()) return cmd_check(preset);
    return cmd_presets();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
