#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ocpopt/numeric.hpp"
#include "ocpopt/problems.hpp"
#include "ocpopt/solvers.hpp"

namespace ocpopt {

/// Asymptotic contraction of the fixed-depth iteration with R = r I:
/// per_mode[i] = (r / (r + lambda_i))^(N+1) over the ascending eigenvalues of
/// the Hessian at the minimizer; overall is the largest of them.
struct ContractionConstant {
  double overall = 0.0;
  std::vector<double> per_mode;
  std::vector<double> eigenvalues;
};

/// Throws NotPositiveDefinite when an eigenvalue is <= 0, BadParams for r <= 0 or N < 0.
ContractionConstant theoretical_constant(const Mat& hess_at_star, double r, int N);

/// Per-step factors of one annealed pass: factors[i][mode] =
/// (r / (r + lambda_mode))^(N - i + 1) for i = 0..N.
struct PassFactors {
  std::vector<std::vector<double>> factors;
  /// Product over the pass, (r / (r + lambda))^((N+1)(N+2)/2) per mode.
  std::vector<double> product;
  std::vector<double> eigenvalues;
};

PassFactors single_pass_factors(const Mat& hess_at_star, double r, int N);

struct RateReport {
  /// Geometric mean of consecutive error-norm ratios over the tail.
  double empirical_ratio = 0.0;
  /// NaN when no theoretical value was supplied.
  double theoretical_constant = 0.0;
  std::vector<double> per_mode_constants;
  /// |empirical - theoretical| / theoretical.
  double relative_gap = 0.0;
  int samples_used = 0;
};

inline constexpr int kDefaultRateTail = 6;

/// Fits the tail contraction of `traj` towards `x_star`. Errors at or below
/// 100 machine epsilons end the usable prefix. Uses the last min(tail, m)
/// ratios of the m usable ones and throws InsufficientData when m < 3.
RateReport empirical_rate(const Trajectory& traj, const Vec& x_star, int tail = kDefaultRateTail,
                          std::optional<ContractionConstant> theory = std::nullopt);

/// Derivatives at x* of phi(x) = x - gbar(x, r, N + 1) for a scalar problem.
struct PhiProbe {
  double phi_prime_at_star = 0.0;
  double phi_second_at_star = 0.0;
  /// |f'''(x*) / f''(x*)|
  double bound = 0.0;
  /// (r / (r + f''(x*)))^(N+1)
  double expected_phi_prime = 0.0;

  bool phi_prime_matches(double tol = 1e-6) const;
  /// |phi''(x*)| < bound; false whenever the bound is zero.
  bool bound_holds_strictly() const;
};

/// Finite-difference probe of the fixed-depth iteration map. Uses the
/// analytic third derivative when the objective provides one.
PhiProbe phi_probe(const Objective& obj, double r, int N, double x_star);

struct ComparisonRow {
  std::string solver;
  int iterations = 0;
  std::int64_t gradient_evals = 0;
  std::int64_t hessian_evals = 0;
  std::int64_t linear_solves = 0;
  double final_f = 0.0;
  double final_grad_norm = 0.0;
  Termination termination = Termination::MaxOuter;
};

struct ComparisonTable {
  std::string problem;
  std::vector<ComparisonRow> rows;

  /// First row with the given label, or nullptr.
  const ComparisonRow* find(const std::string& label) const;
};

/// Row for a finished run whose objective was instrumented with `counters`.
ComparisonRow summarize(const std::string& label, const Trajectory& traj,
                        const EvalCounters& counters);

/// Runs each solver from `x0` on an instrumented copy of `obj`. Rows follow
/// the order of `solvers`; failures become rows rather than exceptions.
ComparisonTable compare(const std::vector<SolverSpec>& solvers, const Objective& obj, const Vec& x0);

}  // namespace ocpopt
