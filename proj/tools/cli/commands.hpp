#pragma once

#include <iosfwd>
#include <string>

#include "cli/config.hpp"

namespace ocpopt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitSolverFailure = 2;

inline constexpr int kReportSchemaVersion = 1;

struct RunOptions {
  Overrides overrides;
  int jobs = 1;
};

/// Runs every configured solver. Writes <label>.csv per solver and
/// solve_report.json. Exit 2 when any solver ended in StepFailure.
int cmd_solve(const std::string& config_path, const RunOptions& options, std::ostream& out,
              std::ostream& err);

/// Runs the configured oracle and probe suites. Exit 0 iff every asserted
/// tolerance is met, 2 otherwise.
int cmd_verify(const std::string& config_path, const RunOptions& options, std::ostream& out,
               std::ostream& err);

/// Rate grid over (r, N) for the unified and annealed solvers plus one row per
/// baseline, and a comparison table of the configured solvers.
int cmd_rates(const std::string& config_path, const RunOptions& options, std::ostream& out,
              std::ostream& err);

int cmd_list(std::ostream& out);

}  // namespace ocpopt::cli
