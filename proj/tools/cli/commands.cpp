#include "cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>
#include <vector>

#include "cli/io.hpp"

namespace ocpopt::cli {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr double kCostOptimalityTol = 1e-5;
constexpr double kImplicitTol = 1e-10;
constexpr double kSemiImplicitAgreementTol = 1e-8;
constexpr double kPhiPrimeTol = 1e-6;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs fn(0..count-1) on up to `jobs` threads. Each index runs exactly once;
// callers store results by index so output order never depends on scheduling.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

json to_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

// NaN is not representable in JSON; emit null.
json real(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const ComparisonRow& row) {
  return {{"solver", row.solver},
          {"iterations", row.iterations},
          {"gradient_evals", row.gradient_evals},
          {"hessian_evals", row.hessian_evals},
          {"linear_solves", row.linear_solves},
          {"final_f", real(row.final_f)},
          {"final_grad_norm", real(row.final_grad_norm)},
          {"termination", std::string(to_string(row.termination))}};
}

json to_json(const ComparisonTable& table) {
  json rows = json::array();
  for (const auto& row : table.rows) rows.push_back(to_json(row));
  return {{"problem", table.problem}, {"rows", rows}};
}

json to_json(const RateReport& r) {
  json modes = json::array();
  for (double m : r.per_mode_constants) modes.push_back(real(m));
  return {{"empirical_ratio", real(r.empirical_ratio)},
          {"theoretical_constant", real(r.theoretical_constant)},
          {"per_mode_constants", modes},
          {"relative_gap", real(r.relative_gap)},
          {"samples_used", r.samples_used}};
}

json report_header(const std::string& command, const ExperimentConfig& cfg, const Problem& problem,
                   const Vec& x0) {
  json header;
  header["schema_version"] = kReportSchemaVersion;
  header["command"] = command;
  header["config"] = cfg.echo;
  header["problem"] = {{"name", problem.objective.name},
                       {"dim", problem.objective.dim},
                       {"x0", to_json(x0)},
                       {"minimizer", problem.minimizer ? to_json(problem.minimizer->x_star)
                                                       : json(nullptr)}};
  return header;
}

std::filesystem::path out_path(const ExperimentConfig& cfg, const std::string& file) {
  return std::filesystem::path(cfg.outputs.dir) / file;
}

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
  } catch (const std::filesystem::filesystem_error& e) {
    err << "io error: " << e.what() << '\n';
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  }
  return kExitConfig;
}

// Theoretical contraction of the fixed-depth iteration when the weight is
// scalar and the minimizer's Hessian is positive definite.
std::optional<ContractionConstant> unified_theory(const Problem& problem, const SolverConfig& s,
                                                  double r, int N) {
  if (!problem.minimizer || !s.scalar_weight() || s.kind != SolverKind::Unified) return std::nullopt;
  try {
    return theoretical_constant(problem.minimizer->hess_at_star, r, N);
  } catch (const Error&) {
    return std::nullopt;
  }
}

struct SolveOutcome {
  Trajectory traj;
  ComparisonRow row;
  double seconds = 0.0;
  std::string error;
};

}  // namespace

int cmd_solve(const std::string& config_path, const RunOptions& options, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    const auto start = Clock::now();
    const ExperimentConfig cfg = load_config(config_path, options.overrides);
    if (cfg.solvers.empty()) throw ConfigError("solvers must list at least one solver");
    const Problem problem = build_problem(cfg);
    const Vec x0 = resolve_x0(cfg, problem);
    const auto specs = resolve_solvers(cfg, problem.objective.dim);

    std::vector<SolveOutcome> outcomes(specs.size());
    parallel_for(specs.size(), options.jobs, [&](std::size_t i) {
      const auto t0 = Clock::now();
      EvalCounters counters;
      const Objective counted = instrument(problem.objective, counters);
      try {
        outcomes[i].traj = run_solver(specs[i], counted, x0);
        outcomes[i].row = summarize(specs[i].label, outcomes[i].traj, counters);
      } catch (const Error& e) {
        outcomes[i].error = e.what();
      }
      outcomes[i].seconds = seconds_since(t0);
    });

    json report = report_header("solve", cfg, problem, x0);
    json solvers = json::array();
    ComparisonTable table;
    table.problem = problem.objective.name;
    json timing = json::object();
    bool any_failure = false;

    for (std::size_t i = 0; i < specs.size(); ++i) {
      const auto& s = cfg.solvers[i];
      const auto& o = outcomes[i];
      timing[s.label] = o.seconds;
      json entry = {{"label", s.label}, {"kind", std::string(to_string(s.kind))}};
      if (!o.error.empty()) {
        any_failure = true;
        entry["termination"] = "StepFailure";
        entry["failure"] = o.error;
        solvers.push_back(entry);
        continue;
      }
      const Trajectory& traj = o.traj;
      any_failure = any_failure || traj.termination == Termination::StepFailure;
      table.rows.push_back(o.row);
      entry["termination"] = std::string(to_string(traj.termination));
      entry["failure"] = traj.failure;
      entry["iterations"] = traj.steps();
      entry["final_x"] = to_json(traj.final_iterate());
      entry["final_f"] = real(traj.f_values.back());
      entry["final_grad_norm"] = real(traj.final_grad_norm);
      entry["gradient_evals"] = o.row.gradient_evals;
      entry["hessian_evals"] = o.row.hessian_evals;
      entry["linear_solves"] = o.row.linear_solves;
      entry["rate"] = nullptr;
      if (problem.minimizer) {
        try {
          const RateReport rate = empirical_rate(traj, problem.minimizer->x_star, kDefaultRateTail,
                                                 unified_theory(problem, s, s.r, s.N));
          entry["rate"] = to_json(rate);
        } catch (const InsufficientData& e) {
          entry["rate_note"] = e.what();
        }
      }
      solvers.push_back(entry);

      if (cfg.outputs.csv) {
        write_atomic(out_path(cfg, s.label + ".csv"), trajectory_csv(traj, problem.objective));
      }
      out << s.label << ": " << to_string(traj.termination) << " after " << traj.steps()
          << " steps, f = " << format_real(traj.f_values.back()) << '\n';
      if (!traj.failure.empty()) out << "  " << traj.failure << '\n';
    }
    report["solvers"] = solvers;
    report["comparison"] = to_json(table);
    timing["total"] = seconds_since(start);
    report["timing"] = timing;

    if (cfg.outputs.csv) write_atomic(out_path(cfg, "comparison.csv"), comparison_csv(table));
    if (cfg.outputs.json) write_atomic(out_path(cfg, "solve_report.json"), report.dump(2) + "\n");
    return any_failure ? kExitSolverFailure : kExitOk;
  });
}

namespace {

struct Check {
  Check(std::string suite_, std::string name_, std::string metric_)
      : suite(std::move(suite_)), name(std::move(name_)), metric(std::move(metric_)) {}

  std::string suite;
  std::string name;
  std::string metric;
  double value = 0.0;
  double tolerance = 0.0;
  bool asserted = true;
  bool passed = false;
  std::string note;
};

Mat weight_or_scalar(const Mat& R, double r, Eigen::Index dim, const std::string& where) {
  if (R.size() == 0) return r * Mat::Identity(dim, dim);
  if (R.rows() != dim) throw ConfigError(where + ".R has the wrong dimension");
  return R;
}

bool same_matrix(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

Check fail(std::string suite, std::string name, std::string metric, double tol, const std::string& why) {
  Check c{std::move(suite), std::move(name), std::move(metric)};
  c.value = std::numeric_limits<double>::quiet_NaN();
  c.tolerance = tol;
  c.note = why;
  return c;
}

}  // namespace

int cmd_verify(const std::string& config_path, const RunOptions& options, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] {
    const auto start = Clock::now();
    const ExperimentConfig cfg = load_config(config_path, options.overrides);
    const Problem problem = build_problem(cfg);
    const Objective& obj = problem.objective;
    const Vec x0 = resolve_x0(cfg, problem);
    const VerifyConfig& v = cfg.verify;
    if (!v.cost_optimality && !v.implicit && !v.semi_implicit && !v.phi_probe) {
      throw ConfigError("verify section must enable at least one suite");
    }

    std::vector<Check> checks;
    json details = json::object();
    json timing = json::object();

    if (v.cost_optimality) {
      const auto t0 = Clock::now();
      const Mat R = weight_or_scalar(v.cost_optimality->R, v.cost_optimality->r, obj.dim, "verify.cost_optimality");
      json suite = json::array();
      for (int N : v.cost_optimality->horizons) {
        const std::string name = "N=" + std::to_string(N);
        const char* metric = v.cost_optimality->half_weight ? "max_violation" : "max_violation_doubled_weight";
        try {
          const ControlSolution sol = solve_ocp_bruteforce(obj, R, N, x0, v.cost_optimality->half_weight);
          const CostOptimalityReport rep = check_cost_optimality(sol, obj, R);
          Check c{"cost_optimality", name, metric};
          c.value = v.cost_optimality->half_weight ? rep.max_violation : rep.max_violation_doubled_weight;
          c.tolerance = kCostOptimalityTol;
          c.passed = c.value <= c.tolerance;
          checks.push_back(c);
          suite.push_back({{"N", N},
                           {"half_weight", v.cost_optimality->half_weight},
                           {"cost", real(sol.cost)},
                           {"stationarity_residual", real(sol.stationarity_residual)},
                           {"max_violation", real(rep.max_violation)},
                           {"max_violation_doubled_weight", real(rep.max_violation_doubled_weight)},
                           {"factor_two_signature", rep.factor_two_signature}});
        } catch (const Error& e) {
          checks.push_back(fail("cost_optimality", name, metric, kCostOptimalityTol, e.what()));
        }
      }
      details["cost_optimality"] = suite;
      timing["cost_optimality"] = seconds_since(t0);
    }

    std::optional<ImplicitTrajectory> implicit;
    if (v.implicit) {
      const auto t0 = Clock::now();
      const Mat R = weight_or_scalar(v.implicit->R, v.implicit->r, obj.dim, "verify.implicit");
      const std::string name = "N=" + std::to_string(v.implicit->N);
      try {
        implicit = solve_implicit(obj, R, v.implicit->N, x0);
        Check c{"implicit", name, "residual"};
        c.value = implicit->residual;
        c.tolerance = kImplicitTol;
        c.passed = c.value <= c.tolerance;
        checks.push_back(c);
        Check sub{"implicit", name, "substituted_residual"};
        sub.value = implicit_residual(obj, R, implicit->states);
        sub.tolerance = kImplicitTol;
        sub.passed = sub.value <= sub.tolerance;
        checks.push_back(sub);
        json states = json::array();
        for (const Vec& s : implicit->states) states.push_back(to_json(s));
        details["implicit"] = {{"N", v.implicit->N},
                               {"residual", real(implicit->residual)},
                               {"newton_iterations", implicit->newton_iterations},
                               {"fixed_point_iterations", implicit->fixed_point_iterations},
                               {"states", states}};
      } catch (const Error& e) {
        checks.push_back(fail("implicit", name, "residual", kImplicitTol, e.what()));
      }
      timing["implicit"] = seconds_since(t0);
    }

    if (v.semi_implicit) {
      const auto t0 = Clock::now();
      const Mat R = weight_or_scalar(v.semi_implicit->R, v.semi_implicit->r, obj.dim,
                                     "verify.semi_implicit");
      const std::string name = "N=" + std::to_string(v.semi_implicit->N);
      try {
        const ImplicitTrajectory semi = solve_semi_implicit(obj, R, v.semi_implicit->N, x0);
        Check c{"semi_implicit", name, "residual"};
        c.value = semi.residual;
        c.tolerance = kImplicitTol;
        c.passed = c.value <= c.tolerance;
        checks.push_back(c);
        json entry = {{"N", v.semi_implicit->N},
                      {"residual", real(semi.residual)},
                      {"iterations", semi.iterations_used}};
        // Agreement with the implicit trajectory is exact only when the
        // first-order expansion of the gradient is, i.e. for quadratics.
        if (implicit && implicit->states.size() == semi.states.size() &&
            v.implicit->N == v.semi_implicit->N && same_matrix(v.implicit->R, v.semi_implicit->R) &&
            v.implicit->r == v.semi_implicit->r) {
          double gap = 0.0;
          for (std::size_t k = 0; k < semi.states.size(); ++k) {
            gap = std::max(gap, (semi.states[k] - implicit->states[k]).lpNorm<Eigen::Infinity>());
          }
          Check agree{"semi_implicit", name, "gap_to_implicit"};
          agree.value = gap;
          agree.tolerance = kSemiImplicitAgreementTol;
          const bool quadratic = obj.name == "quadratic1d" || obj.name == "quadratic_nd";
          agree.asserted = quadratic;
          agree.passed = !quadratic || gap <= agree.tolerance;
          if (!quadratic) agree.note = "recorded only (non-quadratic objective)";
          checks.push_back(agree);
          entry["gap_to_implicit"] = real(gap);
        }
        details["semi_implicit"] = entry;
      } catch (const Error& e) {
        checks.push_back(fail("semi_implicit", name, "residual", kImplicitTol, e.what()));
      }
      timing["semi_implicit"] = seconds_since(t0);
    }

    if (v.phi_probe) {
      const auto t0 = Clock::now();
      if (obj.dim != 1 || !problem.minimizer) {
        throw ConfigError("phi_probe needs a scalar problem with a known minimizer");
      }
      const double x_star = problem.minimizer->x_star[0];
      json suite = json::array();
      for (double r : v.phi_probe->r_grid) {
        for (int N : v.phi_probe->N_grid) {
          const std::string name = "r=" + format_real(r) + ",N=" + std::to_string(N);
          try {
            const PhiProbe p = phi_probe(obj, r, N, x_star);
            Check prime{"phi_probe", name, "phi_prime_error"};
            prime.value = std::abs(p.phi_prime_at_star - p.expected_phi_prime);
            prime.tolerance = kPhiPrimeTol;
            prime.passed = p.phi_prime_matches(kPhiPrimeTol);
            checks.push_back(prime);
            Check bound{"phi_probe", name, "abs_phi_second"};
            bound.value = std::abs(p.phi_second_at_star);
            bound.tolerance = p.bound;
            bound.asserted = p.bound > 0.0;
            bound.passed = !bound.asserted || p.bound_holds_strictly();
            if (!bound.asserted) bound.note = "bound is zero; recorded only";
            checks.push_back(bound);
            suite.push_back({{"r", r},
                             {"N", N},
                             {"phi_prime", real(p.phi_prime_at_star)},
                             {"expected_phi_prime", real(p.expected_phi_prime)},
                             {"phi_second", real(p.phi_second_at_star)},
                             {"bound", real(p.bound)}});
          } catch (const Error& e) {
            checks.push_back(fail("phi_probe", name, "phi_prime_error", kPhiPrimeTol, e.what()));
          }
        }
      }
      details["phi_probe"] = suite;
      timing["phi_probe"] = seconds_since(t0);
    }

    bool all_passed = true;
    json check_list = json::array();
    std::ostringstream csv;
    csv << "suite,case,metric,value,tolerance,asserted,passed,note\n";
    for (const auto& c : checks) {
      all_passed = all_passed && c.passed;
      check_list.push_back({{"suite", c.suite},
                            {"case", c.name},
                            {"metric", c.metric},
                            {"value", real(c.value)},
                            {"tolerance", real(c.tolerance)},
                            {"asserted", c.asserted},
                            {"passed", c.passed},
                            {"note", c.note}});
      csv << c.suite << ",\"" << c.name << "\"," << c.metric << ',' << format_real(c.value) << ','
          << format_real(c.tolerance) << ',' << (c.asserted ? "true" : "false") << ','
          << (c.passed ? "true" : "false") << ",\"" << c.note << "\"\n";
      out << (c.passed ? "PASS " : "FAIL ") << c.suite << ' ' << c.name << ' ' << c.metric << " = "
          << format_real(c.value) << " (tol " << format_real(c.tolerance) << ")"
          << (c.note.empty() ? "" : " " + c.note) << '\n';
    }

    json report = report_header("verify", cfg, problem, x0);
    report["checks"] = check_list;
    report["details"] = details;
    report["all_passed"] = all_passed;
    timing["total"] = seconds_since(start);
    report["timing"] = timing;
    if (cfg.outputs.csv) write_atomic(out_path(cfg, "verify.csv"), csv.str());
    if (cfg.outputs.json) write_atomic(out_path(cfg, "verify_report.json"), report.dump(2) + "\n");
    return all_passed ? kExitOk : kExitSolverFailure;
  });
}

namespace {

struct RateRow {
  std::string solver;
  SolverKind kind = SolverKind::Unified;
  std::optional<double> r;
  std::optional<int> N;
  RateReport rate;
  double pass_product = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  Termination termination = Termination::MaxOuter;
  std::string note;
};

}  // namespace

int cmd_rates(const std::string& config_path, const RunOptions& options, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    const auto start = Clock::now();
    const ExperimentConfig cfg = load_config(config_path, options.overrides);
    if (cfg.solvers.empty()) throw ConfigError("solvers must list at least one solver");
    const Problem problem = build_problem(cfg);
    if (!problem.minimizer) throw ConfigError("rates needs a problem with a known minimizer");
    const Vec x0 = resolve_x0(cfg, problem);
    const Vec& x_star = problem.minimizer->x_star;
    const Eigen::Index dim = problem.objective.dim;
    const auto specs = resolve_solvers(cfg, dim);

    // One task per (solver, r, N) for the two recursion modes, one per baseline.
    struct Task {
      std::size_t solver;
      std::optional<double> r;
      std::optional<int> N;
    };
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < cfg.solvers.size(); ++i) {
      const auto kind = cfg.solvers[i].kind;
      if (kind == SolverKind::Unified || kind == SolverKind::Annealed) {
        for (double r : cfg.rates.r_grid) {
          for (int N : cfg.rates.N_grid) tasks.push_back({i, r, N});
        }
      } else {
        tasks.push_back({i, std::nullopt, std::nullopt});
      }
    }

    std::vector<RateRow> rows(tasks.size());
    parallel_for(tasks.size(), options.jobs, [&](std::size_t t) {
      const Task& task = tasks[t];
      SolverConfig s = cfg.solvers[task.solver];
      RateRow& row = rows[t];
      row.solver = s.label;
      row.kind = s.kind;
      row.r = task.r;
      row.N = task.N;
      if (task.r) {
        s.r = *task.r;
        s.R = Mat();
        s.N = *task.N;
      }
      row.rate.empirical_ratio = row.rate.theoretical_constant = row.rate.relative_gap =
          std::numeric_limits<double>::quiet_NaN();
      try {
        const Trajectory traj = run_solver(resolve_solver(s, dim), problem.objective, x0);
        row.iterations = static_cast<int>(traj.steps());
        row.termination = traj.termination;
        if (s.kind == SolverKind::Annealed) {
          const PassFactors pf = single_pass_factors(problem.minimizer->hess_at_star, s.r, s.N);
          row.pass_product = *std::max_element(pf.product.begin(), pf.product.end());
        }
        row.rate = empirical_rate(traj, x_star, cfg.rates.tail, unified_theory(problem, s, s.r, s.N));
      } catch (const ConfigError& e) {
        row.note = e.what();
      } catch (const Error& e) {
        row.note = e.what();
      }
    });

    std::ostringstream csv;
    csv << "solver,kind,r,N,empirical_ratio,theoretical_constant,relative_gap,samples_used,"
           "pass_product,iterations,termination,note\n";
    json rate_rows = json::array();
    for (const auto& row : rows) {
      csv << row.solver << ',' << to_string(row.kind) << ',' << (row.r ? format_real(*row.r) : "")
          << ',' << (row.N ? std::to_string(*row.N) : "") << ','
          << format_real(row.rate.empirical_ratio) << ',' << format_real(row.rate.theoretical_constant)
          << ',' << format_real(row.rate.relative_gap) << ',' << row.rate.samples_used << ','
          << format_real(row.pass_product) << ',' << row.iterations << ','
          << to_string(row.termination) << ",\"" << row.note << "\"\n";
      json j = to_json(row.rate);
      j["solver"] = row.solver;
      j["kind"] = std::string(to_string(row.kind));
      j["r"] = row.r ? json(*row.r) : json(nullptr);
      j["N"] = row.N ? json(*row.N) : json(nullptr);
      j["pass_product"] = real(row.pass_product);
      j["iterations"] = row.iterations;
      j["termination"] = std::string(to_string(row.termination));
      j["note"] = row.note;
      rate_rows.push_back(j);
    }

    const ComparisonTable table = compare(specs, problem.objective, x0);
    for (const auto& row : table.rows) {
      out << row.solver << ": " << row.iterations << " iterations, " << to_string(row.termination)
          << '\n';
    }

    json report = report_header("rates", cfg, problem, x0);
    report["rates"] = rate_rows;
    report["comparison"] = to_json(table);
    report["timing"] = {{"total", seconds_since(start)}};
    if (cfg.outputs.csv) {
      write_atomic(out_path(cfg, "rates.csv"), csv.str());
      write_atomic(out_path(cfg, "comparison.csv"), comparison_csv(table));
    }
    if (cfg.outputs.json) write_atomic(out_path(cfg, "rates_report.json"), report.dump(2) + "\n");
    return kExitOk;
  });
}

int cmd_list(std::ostream& out) {
  out << "problems:\n";
  for (const auto& name : builtin_names()) out << "  " << name << "  " << builtin_usage(name) << '\n';
  out << "solvers:\n"
      << "  unified   x <- x - gbar(x, R, N+1) at every step (r|R, N, adapt, grad_tol, max_outer)\n"
      << "  annealed  passes of N+1 steps with depth N+1 down to 1 (r|R, N, repeat_passes, ...)\n"
      << "  newton    x <- x - H^{-1} grad, no regularization (grad_tol, max_outer)\n"
      << "  gd        x <- x - lr grad (lr, grad_tol, max_outer)\n";
  return kExitOk;
}

}  // namespace ocpopt::cli
