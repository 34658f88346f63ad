#pragma once

// Subcommands of the command-line front end. Each writes its CSV files and a
// summary.json (embedding the config and the precision actually used) into the
// output directory and returns the summary.

#include "cherry/config.hpp"
#include "cherry/error.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cherry::commands {

struct RunOptions {
  std::string out_dir = ".";
  std::optional<int> precision_override;
};

const std::vector<std::string>& names();

nlohmann::json run(const std::string& command, const config::ExperimentConfig& cfg, const RunOptions& opts);

nlohmann::json cmd_tune(const config::ExperimentConfig& cfg, const RunOptions& opts);
nlohmann::json cmd_alpha(const config::ExperimentConfig& cfg, const RunOptions& opts);
nlohmann::json cmd_bounds(const config::ExperimentConfig& cfg, const RunOptions& opts);
nlohmann::json cmd_gamma(const config::ExperimentConfig& cfg, const RunOptions& opts);
nlohmann::json cmd_orbit(const config::ExperimentConfig& cfg, const RunOptions& opts);
nlohmann::json cmd_report(const config::ExperimentConfig& cfg, const RunOptions& opts);

/// 1 for configuration and parameter errors, 2 for numeric stalls
/// (plateau, precision), 3 for everything else.
int exit_code(ErrorKind kind);

/// {"error": kind, "message": ..., "field": ... (config errors only)}
nlohmann::json error_json(const Error& e);

}  // namespace cherry::commands
