#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace ocpopt::cli;

  CLI::App app{"ocpopt: optimal-control-derived second-order iterations and experiments"};
  app.require_subcommand(1);

  RunOptions options;
  std::string out_dir;
  std::string format;
  std::uint64_t seed = 0;
  std::string config;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config, "Experiment configuration (JSON)")->required();
    cmd->add_option("--out-dir", out_dir, "Output directory (overrides outputs.dir)");
    cmd->add_option("--seed", seed, "Problem seed (overrides problem.seed)");
    cmd->add_option("--jobs,-j", options.jobs, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--format", format, "Report formats")
        ->check(CLI::IsMember({"csv", "json", "both"}));
  };

  auto* solve = app.add_subcommand("solve", "Run the configured solvers");
  auto* verify = app.add_subcommand("verify", "Run oracle and probe suites");
  auto* rates = app.add_subcommand("rates", "Convergence-rate grid and comparison table");
  auto* list = app.add_subcommand("list", "List builtin problems and solver kinds");
  for (auto* cmd : {solve, verify, rates}) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (!out_dir.empty()) options.overrides.out_dir = out_dir;
  if (!format.empty()) options.overrides.format = format;
  for (auto* cmd : {solve, verify, rates}) {
    if (cmd->parsed() && cmd->count("--seed") > 0) options.overrides.seed = seed;
  }

  if (*list) return cmd_list(std::cout);
  if (*solve) return cmd_solve(config, options, std::cout, std::cerr);
  if (*verify) return cmd_verify(config, options, std::cout, std::cerr);
  return cmd_rates(config, options, std::cout, std::cerr);
}
