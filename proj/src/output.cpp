#include "dpen/output.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace dpen {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// JSON has no NaN/inf; those become null.
nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

}  // namespace

const std::string& csv_header() {
  static const std::string header = "t,f,f_eps,grad_norm,max_g,h_inf,est_err,in_domain";
  return header;
}

void write_csv(std::ostream& out, const TrajectoryLog& log) {
  out << csv_header() << '\n';
  for (const LogRow& r : log.rows) {
    out << fmt(r.t) << ',' << fmt(r.f) << ',' << fmt(r.f_eps) << ',' << fmt(r.grad_norm) << ','
        << fmt(r.max_g) << ',' << fmt(r.h_inf) << ',' << fmt(r.est_err) << ',' << (r.in_domain ? 1 : 0)
        << '\n';
  }
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, value] : config_entries(cfg)) j[key] = value;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config JSON must be an object");
  ExperimentConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_string()) throw ConfigError("key '" + key + "': expected a string value in JSON");
    set_config_value(cfg, key, value.get<std::string>());
  }
  validate_config(cfg);
  return cfg;
}

nlohmann::json run_metadata(const ExperimentConfig& cfg, const Instance& inst, const TrajectoryLog& log) {
  nlohmann::json j;
  j["config"] = config_to_json(cfg);
  j["seeds"] = {{"run", cfg.run.seed}, {"problem", cfg.problem.seed}};
  j["problem"] = {{"name", inst.problem.name()},
                  {"n", inst.problem.n()},
                  {"m", inst.problem.m()},
                  {"p", inst.problem.p()},
                  {"edges", inst.graph.edges().size()}};
  nlohmann::json result;
  result["steps"] = log.steps;
  result["rows"] = log.rows.size();
  result["halted"] = log.halted;
  if (log.halted) result["halt_reason"] = log.halt_reason;
  result["steps_outside_domain"] = log.steps_outside_domain;
  result["max_g_seen"] = number(log.max_g_seen);
  if (!log.rows.empty()) {
    const LogRow& last = log.rows.back();
    result["final"] = {{"t", number(last.t)},           {"f", number(last.f)},
                       {"f_eps", number(last.f_eps)},   {"grad_norm", number(last.grad_norm)},
                       {"max_g", number(last.max_g)},   {"h_inf", number(last.h_inf)},
                       {"est_err", number(last.est_err)}, {"in_domain", last.in_domain}};
  }
  std::vector<double> x(log.x_final.data(), log.x_final.data() + log.x_final.size());
  result["x_final"] = x;
  j["result"] = result;
  return j;
}

}  // namespace dpen
