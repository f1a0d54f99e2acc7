#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ocpopt/ocpopt.hpp"

namespace ocpopt::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemConfig {
  std::string name;
  ProblemParams params;
  std::optional<int> dim;
};

struct OutputConfig {
  std::string dir = "ocpopt-out";
  bool csv = true;
  bool json = true;
};

struct CostOptimalityConfig {
  std::vector<int> horizons{0, 1, 2};
  bool half_weight = true;
  Mat R;  // empty means r * I
  double r = 1.0;
};

struct HorizonConfig {
  int N = 3;
  Mat R;
  double r = 1.0;
};

struct PhiProbeConfig {
  std::vector<double> r_grid{0.1, 1.0, 10.0};
  std::vector<int> N_grid{0, 1, 3, 7};
};

struct VerifyConfig {
  std::optional<CostOptimalityConfig> cost_optimality;
  std::optional<HorizonConfig> implicit;
  std::optional<HorizonConfig> semi_implicit;
  std::optional<PhiProbeConfig> phi_probe;
};

struct RatesConfig {
  std::vector<double> r_grid{0.1, 1.0, 10.0};
  std::vector<int> N_grid{0, 1, 3};
  int tail = kDefaultRateTail;
};

struct SolverConfig {
  std::string label;
  SolverKind kind = SolverKind::Unified;
  /// Scalar weight; ignored when R is non-empty.
  double r = 1.0;
  Mat R;
  int N = 1;
  double lr = 1e-2;
  double grad_tol = 1e-10;
  int max_outer = 10000;
  AdaptPolicy adapt;
  bool repeat_passes = true;

  bool scalar_weight() const { return R.size() == 0; }
};

struct ExperimentConfig {
  ProblemConfig problem;
  /// Either explicit coordinates or a preset ("standard", "minimizer").
  std::optional<std::vector<double>> x0;
  std::string x0_preset = "standard";
  std::vector<SolverConfig> solvers;
  OutputConfig outputs;
  VerifyConfig verify;
  RatesConfig rates;
  /// The parsed document with command-line overrides applied.
  nlohmann::json echo;
};

struct Overrides {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> format;  // csv | json | both
};

/// Parses a configuration document. Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc, const Overrides& overrides = {});
ExperimentConfig load_config(const std::string& path, const Overrides& overrides = {});

/// Builds the problem and resolves x0. Throws ConfigError.
Problem build_problem(const ExperimentConfig& config);
Vec resolve_x0(const ExperimentConfig& config, const Problem& problem);

/// Expands a solver entry against the problem dimension (scalar r becomes
/// r * I) and validates it. Throws ConfigError.
SolverSpec resolve_solver(const SolverConfig& solver, Eigen::Index dim);
std::vector<SolverSpec> resolve_solvers(const ExperimentConfig& config, Eigen::Index dim);

}  // namespace ocpopt::cli
