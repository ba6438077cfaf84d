#include "dpen/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

namespace dpen {

namespace {

const std::vector<std::string> kKeys{
    "problem",    "problem.seed", "problem.n",   "problem.objective", "problem.targets",
    "problem.lower", "problem.upper", "graph",   "graph.edges",       "algorithm",
    "epsilon",    "gamma",        "tau",         "dt",                "horizon",
    "beta",       "disturbance.centered", "seed", "x0",               "log.stride",
    "domain.slack", "output.csv", "output.json",
};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& expected,
                            const std::string& value) {
  throw ConfigError("key '" + key + "': expected " + expected + ", got '" + value + "'");
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0;
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) bad_value(key, "a number", value);
  return out;
}

long to_long(const std::string& key, const std::string& value) {
  long out = 0;
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, "an integer", value);
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, "a non-negative integer", value);
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, "true or false", value);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> to_doubles(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split(value, ',')) out.push_back(to_double(key, item));
  return out;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (double v : values) out += (out.empty() ? "" : ",") + fmt(v);
  return out;
}

/// "owner=0 terms=0:1,1:-6 bound=0"
ConstraintRow parse_row(const std::string& key, const std::string& value, bool equality) {
  ConstraintRow row;
  row.name = key.substr(key.find('.') + 1);
  row.equality = equality;
  bool has_owner = false, has_terms = false, has_bound = false;
  std::istringstream in(value);
  std::string field;
  while (in >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) bad_value(key, "owner=<agent> terms=<agent>:<coef>,... bound=<b>", value);
    const std::string name = field.substr(0, eq), body = field.substr(eq + 1);
    if (name == "owner") {
      row.owner = int(to_long(key + ".owner", body));
      has_owner = true;
    } else if (name == "terms") {
      for (const auto& term : split(body, ',')) {
        const auto colon = term.find(':');
        if (colon == std::string::npos) bad_value(key + ".terms", "<agent>:<coef>", term);
        row.terms.emplace_back(int(to_long(key + ".terms", term.substr(0, colon))),
                               to_double(key + ".terms", term.substr(colon + 1)));
      }
      has_terms = true;
    } else if (name == "bound") {
      row.bound = to_double(key + ".bound", body);
      has_bound = true;
    } else {
      throw ConfigError("key '" + key + "': unknown field '" + name + "'");
    }
  }
  if (!has_owner || !has_terms || !has_bound) {
    throw ConfigError("key '" + key + "': needs owner=, terms= and bound=");
  }
  return row;
}

std::string format_row(const ConstraintRow& row) {
  std::string terms;
  for (const auto& [agent, coef] : row.terms) {
    terms += (terms.empty() ? "" : ",") + std::to_string(agent) + ":" + fmt(coef);
  }
  return "owner=" + std::to_string(row.owner) + " terms=" + terms + " bound=" + fmt(row.bound);
}

Graph make_graph(const ExperimentConfig& cfg, const Instance* preset, int n) {
  const std::string& kind = cfg.graph;
  if (kind == "default") {
    if (preset != nullptr) return preset->graph;
    if (!cfg.edges.empty()) return build_graph(n, cfg.edges);
    throw ConfigError("key 'graph': a custom problem needs graph = ring | path | complete | edges");
  }
  if (kind == "ring") return ring_graph(n);
  if (kind == "path") return path_graph(n);
  if (kind == "complete") return complete_graph(n);
  if (kind == "edges") return build_graph(n, cfg.edges);
  throw ConfigError("key 'graph': unknown graph '" + kind + "'");
}

Problem make_custom(const ProblemSpec& spec) {
  const int n = spec.n;
  if (n < 1) throw ConfigError("key 'problem.n': a custom problem needs n >= 1");
  if (!spec.targets.empty() && int(spec.targets.size()) != n) {
    throw ConfigError("key 'problem.targets': expected " + std::to_string(n) + " values");
  }
  std::vector<ScalarFunction> objectives;
  Sense sense = Sense::Minimize;
  for (int i = 0; i < n; ++i) {
    if (spec.objective == "quadratic") {
      const double t = spec.targets.empty() ? 0.0 : spec.targets[i];
      objectives.push_back({[t](double v) { return (v - t) * (v - t); },
                            [t](double v) { return 2 * (v - t); }, [](double) { return 2.0; }});
    } else if (spec.objective == "log") {
      const double w = i + 1.0;
      objectives.push_back({[w](double v) { return -w * std::log(v); },
                            [w](double v) { return -w / v; }, [w](double v) { return w / (v * v); }});
      sense = Sense::Maximize;
    } else {
      throw ConfigError("key 'problem.objective': expected quadratic or log, got '" + spec.objective + "'");
    }
  }
  std::vector<ConstraintSpec> ineq, eq;
  for (const ConstraintRow& row : spec.rows) {
    std::vector<std::pair<AgentId, double>> terms = row.terms;
    std::sort(terms.begin(), terms.end());
    std::vector<AgentId> footprint;
    Vector coefs(terms.size());
    for (std::size_t k = 0; k < terms.size(); ++k) {
      if (terms[k].first < 0 || terms[k].first >= n) {
        throw ConfigError("constraint '" + row.name + "': agent " + std::to_string(terms[k].first) +
                          " out of range");
      }
      if (k > 0 && terms[k].first == terms[k - 1].first) {
        throw ConfigError("constraint '" + row.name + "': agent listed twice");
      }
      footprint.push_back(terms[k].first);
      coefs(k) = terms[k].second;
    }
    (row.equality ? eq : ineq).push_back(linear_constraint(row.name, row.owner, footprint, coefs, row.bound));
  }
  Vector lo = Vector::Constant(n, spec.lower), hi = Vector::Constant(n, spec.upper);
  return Problem("custom", std::move(objectives), std::move(ineq), std::move(eq),
                 DomainBox::box(lo, hi), sense);
}

}  // namespace

std::vector<std::string> config_keys() { return kKeys; }

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  RunConfig& run = cfg.run;
  if (key.rfind("ineq.", 0) == 0 || key.rfind("eq.", 0) == 0) {
    ConstraintRow row = parse_row(key, value, key[0] == 'e');
    auto& rows = cfg.problem.rows;
    auto same = std::find_if(rows.begin(), rows.end(), [&](const ConstraintRow& r) { return r.name == row.name; });
    if (same != rows.end()) *same = std::move(row);
    else rows.push_back(std::move(row));
    return;
  }
  if (key == "problem") cfg.problem.name = value;
  else if (key == "problem.seed") cfg.problem.seed = to_u64(key, value);
  else if (key == "problem.n") cfg.problem.n = int(to_long(key, value));
  else if (key == "problem.objective") cfg.problem.objective = value;
  else if (key == "problem.targets") cfg.problem.targets = to_doubles(key, value);
  else if (key == "problem.lower") cfg.problem.lower = to_double(key, value);
  else if (key == "problem.upper") cfg.problem.upper = to_double(key, value);
  else if (key == "graph") cfg.graph = value;
  else if (key == "graph.edges") {
    cfg.edges.clear();
    for (const auto& edge : split(value, ',')) {
      const auto dash = edge.find('-');
      if (dash == std::string::npos) bad_value(key, "a list like 0-1,1-2", value);
      cfg.edges.emplace_back(int(to_long(key, trim(edge.substr(0, dash)))),
                             int(to_long(key, trim(edge.substr(dash + 1)))));
    }
    if (cfg.graph == "default") cfg.graph = "edges";
  }
  else if (key == "algorithm") {
    try {
      run.algorithm = parse_algorithm(value);
    } catch (const InvalidArgument& e) {
      throw ConfigError("key 'algorithm': " + std::string(e.what()));
    }
  }
  else if (key == "epsilon") run.penalty.epsilon = to_double(key, value);
  else if (key == "gamma") run.penalty.gamma = to_double(key, value);
  else if (key == "tau") run.tau = to_double(key, value);
  else if (key == "dt") run.dt = to_double(key, value);
  else if (key == "horizon") run.horizon = to_long(key, value);
  else if (key == "beta") run.beta = to_double(key, value);
  else if (key == "disturbance.centered") run.disturbance_centered = to_bool(key, value);
  else if (key == "seed") run.seed = to_u64(key, value);
  else if (key == "x0") cfg.x0 = value;
  else if (key == "log.stride") run.log_stride = to_long(key, value);
  else if (key == "domain.slack") run.domain_slack = to_double(key, value);
  else if (key == "output.csv") cfg.csv_path = value;
  else if (key == "output.json") cfg.json_path = value;
  else throw ConfigError("unknown key '" + key + "'");
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.problem.name.empty()) throw ConfigError("missing required key 'problem'");
  try {
    cfg.run.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string where = source + ":" + std::to_string(number) + ": ";
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      set_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path);
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& cfg) {
  const RunConfig& run = cfg.run;
  std::vector<std::pair<std::string, std::string>> out{
      {"problem", cfg.problem.name},
      {"problem.seed", std::to_string(cfg.problem.seed)},
  };
  if (cfg.problem.name == "custom") {
    out.emplace_back("problem.n", std::to_string(cfg.problem.n));
    out.emplace_back("problem.objective", cfg.problem.objective);
    if (!cfg.problem.targets.empty()) out.emplace_back("problem.targets", join(cfg.problem.targets));
    out.emplace_back("problem.lower", fmt(cfg.problem.lower));
    out.emplace_back("problem.upper", fmt(cfg.problem.upper));
    for (const ConstraintRow& row : cfg.problem.rows) {
      out.emplace_back((row.equality ? "eq." : "ineq.") + row.name, format_row(row));
    }
  }
  out.emplace_back("graph", cfg.graph);
  if (!cfg.edges.empty()) {
    std::string edges;
    for (const auto& [a, b] : cfg.edges) {
      edges += (edges.empty() ? "" : ",") + std::to_string(a) + "-" + std::to_string(b);
    }
    out.emplace_back("graph.edges", edges);
  }
  out.emplace_back("algorithm", to_string(run.algorithm));
  out.emplace_back("epsilon", fmt(run.penalty.epsilon));
  out.emplace_back("gamma", fmt(run.penalty.gamma));
  out.emplace_back("tau", fmt(run.tau));
  out.emplace_back("dt", fmt(run.dt));
  out.emplace_back("horizon", std::to_string(run.horizon));
  out.emplace_back("beta", fmt(run.beta));
  out.emplace_back("disturbance.centered", run.disturbance_centered ? "true" : "false");
  out.emplace_back("seed", std::to_string(run.seed));
  out.emplace_back("x0", cfg.x0);
  out.emplace_back("log.stride", std::to_string(run.log_stride));
  out.emplace_back("domain.slack", fmt(run.domain_slack));
  if (!cfg.csv_path.empty()) out.emplace_back("output.csv", cfg.csv_path);
  if (!cfg.json_path.empty()) out.emplace_back("output.json", cfg.json_path);
  return out;
}

Instance build_instance(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const ProblemSpec& spec = cfg.problem;
  std::optional<Instance> preset;
  std::optional<Problem> custom;
  if (spec.name == "custom") {
    custom = make_custom(spec);
  } else {
    try {
      preset = make_preset(spec.name, spec.seed);
    } catch (const InvalidArgument& e) {
      throw ConfigError("key 'problem': " + std::string(e.what()));
    }
  }
  const Problem& pr = preset ? preset->problem : *custom;
  Graph graph = [&] {
    try {
      return make_graph(cfg, preset ? &*preset : nullptr, pr.n());
    } catch (const ConfigError&) {
      throw;
    } catch (const InvalidArgument& e) {
      throw ConfigError("key 'graph': " + std::string(e.what()));
    }
  }();
  const LocalityReport locality = validate_locality(pr, graph);
  if (!locality.passed) throw ConfigError("problem is not local on this graph: " + locality.violations.front());

  Vector x0;
  if (cfg.x0 == "default") {
    x0 = preset ? preset->x0 : Vector(Vector::Constant(pr.n(), 0.5 * (spec.lower + spec.upper)));
  } else if (cfg.x0.rfind("const:", 0) == 0) {
    x0 = Vector::Constant(pr.n(), to_double("x0", cfg.x0.substr(6)));
  } else {
    const std::vector<double> values = to_doubles("x0", cfg.x0);
    if (int(values.size()) != pr.n()) {
      throw ConfigError("key 'x0': expected " + std::to_string(pr.n()) + " values, got " +
                        std::to_string(values.size()));
    }
    x0 = Eigen::Map<const Vector>(values.data(), Index(values.size()));
  }
  return Instance{pr, std::move(graph), std::move(x0)};
}

}  // namespace dpen
