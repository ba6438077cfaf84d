#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "dpen/config.hpp"
#include "dpen/dynamics.hpp"

namespace dpen {

/// "t,f,f_eps,grad_norm,max_g,h_inf,est_err,in_domain"
const std::string& csv_header();

/// Header plus one line per log row, floats at 17 significant digits.
void write_csv(std::ostream& out, const TrajectoryLog& log);

/// Config as a flat JSON object of canonical key/value strings.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Sidecar: config echo, seeds, sizes and end-of-run diagnostics.
nlohmann::json run_metadata(const ExperimentConfig& cfg, const Instance& inst, const TrajectoryLog& log);

}  // namespace dpen
