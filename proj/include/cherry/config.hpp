#pragma once

// Experiment configuration: one JSON document per run.
//
// {
//   "map":     {"ell": 1.5, "flat_length": 0.2, "precision_bits": 256,
//               "max_precision_bits": 4096, "lambda1": 1.5, "lambda2": -1},
//   "target":  {"named": "golden"} | {"quotients": [1, 2, 1, 4]} | {"value": "0.38"},
//   "tune":    {"tol": 1e-8},
//   "depths":  {"n_max": 12, "N": 1000},
//   "model":   {"tau0": 1, "kappa": 0.6667, "epsilon_cut": 0.1},
//   "gamma":   {"t_grid": [256, 512], "n0": 6, "z": "0"},
//   "bounds":  {"n0": 2, "K": 1.0, "inject_adversarial": false, "synthetic_n": 200,
//               "synthetic_quotients": [1, 1, 1]},
//   "report":  {"n_iter": 100000, "tau_mu_N": 10000},
//   "params_file": "params.json"
// }
//
// map.ell, map.flat_length, map.precision_bits and one target form are
// required; everything else has a default. Unknown keys are rejected.

#include "cherry/cf.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cherry::config {

struct MapConfig {
  double ell = 0.0;
  double flat_length = 0.0;
  int precision_bits = 0;
  int max_precision_bits = 4096;
  std::optional<double> lambda1;
  std::optional<double> lambda2;
  bool operator==(const MapConfig&) const = default;
};

struct TargetConfig {
  std::optional<std::string> named;  // "golden" or "sqrt2m1"
  std::optional<std::vector<cf::Quotient>> quotients;
  std::optional<std::string> value;  // decimal string in (0, 1)
  std::size_t depth = 96;
  bool operator==(const TargetConfig&) const = default;
};

struct TuneConfig {
  double tol = 1e-8;
  bool operator==(const TuneConfig&) const = default;
};

struct DepthConfig {
  std::size_t n_max = 12;
  std::size_t N = 1000;
  bool operator==(const DepthConfig&) const = default;
};

struct ModelConfig {
  double tau0 = 1.0;
  std::optional<double> kappa;  // default 1/lambda1
  double epsilon_cut = 0.1;
  bool operator==(const ModelConfig&) const = default;
};

struct GammaConfig {
  std::vector<double> t_grid;  // geometric with ratio 2
  std::size_t n0 = 6;
  std::string z = "0";
  bool operator==(const GammaConfig&) const = default;
};

struct BoundsConfig {
  int n0 = 2;
  std::optional<double> K;
  bool inject_adversarial = false;
  std::size_t synthetic_n = 200;
  std::optional<std::vector<cf::Quotient>> synthetic_quotients;
  bool operator==(const BoundsConfig&) const = default;
};

struct ReportConfig {
  std::uint64_t n_iter = 100000;
  std::size_t tau_mu_N = 10000;
  bool operator==(const ReportConfig&) const = default;
};

struct ExperimentConfig {
  MapConfig map;
  TargetConfig target;
  TuneConfig tune;
  DepthConfig depths;
  ModelConfig model;
  std::optional<GammaConfig> gamma;
  BoundsConfig bounds;
  ReportConfig report;
  std::optional<std::string> params_file;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses and validates; throws ConfigError naming the offending field.
ExperimentConfig from_json(const nlohmann::json& j);
ExperimentConfig load(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& c);

/// Builds the rotation target described by the config, values at `bits`.
cf::RotationTarget make_target(const TargetConfig& t, int bits);

}  // namespace cherry::config
