#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ocpopt/numeric.hpp"
#include "ocpopt/problems.hpp"

namespace ocpopt {

/// Per-step inflation of R when R + H(x) fails to factor.
struct AdaptPolicy {
  bool enabled = true;
  double rho = 10.0;
  int max_retries = 6;

  void validate() const;
};

/// Control weight R and horizon N of the underlying control problem, plus
/// the stopping rule.
struct OcpParams {
  Mat R;
  int N = 1;
  double grad_tol = 1e-10;
  int max_outer = 10000;
  AdaptPolicy adapt;
  /// Annealed mode only: keep sweeping until grad_tol instead of stopping
  /// after the single pass that produces x_{N+1}.
  bool repeat_passes = true;

  /// R = r * I_dim.
  static OcpParams scalar(double r, int N, Eigen::Index dim);

  /// Checks every invariant, including R symmetric positive definite (by
  /// factorization). Throws BadParams or NotPositiveDefinite.
  void validate() const;
};

struct GdParams {
  double lr = 1e-2;
  double grad_tol = 1e-10;
  int max_outer = 10000;

  void validate() const;
};

enum class Termination {
  GradTol,
  MaxOuter,
  StepFailure,
  /// Annealed mode with repeat_passes off: the single pass finished above grad_tol.
  PassComplete,
};

std::string_view to_string(Termination t);

struct StepDiag {
  /// The applied step; x_{k+1} = x_k - step.
  Vec step;
  /// Recursion levels used (1 for Newton and gradient descent).
  int depth = 1;
  int retries = 0;
  /// ||grad f(x_k)||_2 at the iterate the step was taken from.
  double grad_norm = 0.0;
  int linear_solves = 0;
};

struct Trajectory {
  std::vector<Vec> iterates;
  std::vector<StepDiag> diags;
  std::vector<double> f_values;
  Termination termination = Termination::MaxOuter;
  /// Empty unless termination == StepFailure.
  std::string failure;
  /// ||grad f|| at the last iterate.
  double final_grad_norm = 0.0;

  std::size_t steps() const noexcept { return diags.size(); }
  const Vec& final_iterate() const { return iterates.back(); }
};

/// The backward step recursion at a single point:
///
///   g <- (R + H)^{-1} grad f
///   repeat depth - 1 times:  g <- (R + H)^{-1} (grad f + R g)
///
/// Uses exactly one gradient and one Hessian evaluation. Throws
/// StepMatrixNotPD when R + H(x) does not factor.
Vec gbar(const Objective& obj, const Vec& x, const Mat& R, int depth);

/// Same recursion from precomputed derivatives. `linear_solves`, when given,
/// is incremented once per back-substitution.
Vec gbar_from(const Vec& grad, const Mat& hess, const Mat& R, int depth,
              int* linear_solves = nullptr);

struct AdaptiveStep {
  Vec step;
  int retries = 0;
  int linear_solves = 0;
};

/// gbar_from with R inflated to rho^j R, j = 0..max_retries, until the step
/// matrix factors. Throws StepMatrixNotPD (carrying `x`) when retries run out
/// or the policy is disabled.
AdaptiveStep adaptive_gbar(const Vec& x, const Vec& grad, const Mat& hess, const Mat& R, int depth,
                           const AdaptPolicy& policy);

/// x <- x - gbar(x, R, N + 1) with a fixed depth at every outer step.
Trajectory unified_solve(const Objective& obj, const OcpParams& params, const Vec& x0);

/// Annealed: within a pass, step k uses depth N - k + 1 (N + 1 down to 1).
Trajectory annealed_solve(const Objective& obj, const OcpParams& params, const Vec& x0);

/// Plain Newton, x <- x - H^{-1} grad f, with no regularization. Only the
/// stopping fields of `params` are used.
Trajectory newton_solve(const Objective& obj, const OcpParams& params, const Vec& x0);

Trajectory gd_solve(const Objective& obj, const GdParams& params, const Vec& x0);

enum class SolverKind { Unified, Annealed, Newton, GradientDescent };

std::string_view to_string(SolverKind kind);
/// Accepts "unified", "annealed", "newton", "gd". Throws BadParams.
SolverKind parse_solver_kind(std::string_view name);

/// A configured solver, as compared in tables and driven from the CLI.
struct SolverSpec {
  std::string label;
  SolverKind kind = SolverKind::Unified;
  OcpParams ocp;
  GdParams gd;
};

Trajectory run_solver(const SolverSpec& spec, const Objective& obj, const Vec& x0);

}  // namespace ocpopt
