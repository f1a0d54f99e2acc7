#pragma once

#include <vector>

#include "ocpopt/numeric.hpp"
#include "ocpopt/problems.hpp"

namespace ocpopt {

/// Brute-force optimum of the finite-horizon control problem
///
///   min_u  sum_{k=0}^{N} [ f(x_k) + w u_k^T R u_k ] + f(x_{N+1}),
///   x_{k+1} = x_k + u_k,
///
/// with w = 1/2 (half_weight) or w = 1.
struct ControlSolution {
  std::vector<Vec> controls;  // u_0 .. u_N
  std::vector<Vec> states;    // x_0 .. x_{N+1}
  double cost = 0.0;
  /// ||grad_u J||_inf at the returned controls.
  double stationarity_residual = 0.0;
  bool half_weight = true;
  int iterations = 0;
};

struct ControlOracleOptions {
  double tolerance = 1e-9;
  int max_gradient_steps = 2000;
  int max_newton_steps = 100;
};

/// Desk scale only: N <= 10 and dim <= 5, else BadParams. Throws
/// OracleNoConverge when the stacked stationarity residual does not reach
/// `options.tolerance`.
ControlSolution solve_ocp_bruteforce(const Objective& obj, const Mat& R, int N, const Vec& x0,
                                     bool half_weight, const ControlOracleOptions& options = {});

struct CostOptimalityReport {
  /// max_k ||u_k + R^{-1} sum_{i>k} grad f(x_i)||_inf
  double max_violation = 0.0;
  /// Same with (2R)^{-1}: the control law of the full-weight cost.
  double max_violation_doubled_weight = 0.0;
  /// The doubled-weight law fits strictly better than the printed one.
  bool factor_two_signature = false;
};

CostOptimalityReport check_cost_optimality(const ControlSolution& sol, const Objective& obj, const Mat& R);

/// States x_0 (fixed) .. x_{N+1} of a trajectory-coupled update solved as one
/// stacked nonlinear system.
struct ImplicitTrajectory {
  std::vector<Vec> states;
  double residual = 0.0;
  int iterations_used = 0;
  int newton_iterations = 0;
  int fixed_point_iterations = 0;
};

struct StackedSolveOptions {
  double tolerance = 1e-10;
  int max_newton = 50;
  int max_fixed_point = 5000;
};

/// Residual of x_{k+1} = x_k - R^{-1} sum_{i=k+1}^{N+1} grad f(x_i), k = 0..N,
/// as max_k of the infinity norm. Independent of the solver that produced `states`.
double implicit_residual(const Objective& obj, const Mat& R, const std::vector<Vec>& states);

/// Residual of the semi-implicit system x_{k+1} = x_k - g_k with
/// g_k = (R + H_k)^{-1}(grad_k + sum_{i=k+1}^{N} (grad_i - H_i g_i)).
double semi_implicit_residual(const Objective& obj, const Mat& R, const std::vector<Vec>& states);

/// Solves the implicit horizon update. Starts from one annealed pass, runs
/// Newton on the stacked system with a finite-difference Jacobian and falls
/// back to damped fixed-point sweeps. N <= 50 and dim <= 10, else BadParams.
/// Throws OracleNoConverge.
ImplicitTrajectory solve_implicit(const Objective& obj, const Mat& R, int N, const Vec& x0,
                                  const StackedSolveOptions& options = {});

/// Solves the first-order-expanded (semi-implicit) horizon update by
/// fixed-point sweeps over the whole trajectory, with a stacked-Newton
/// fallback. Throws OracleNoConverge.
ImplicitTrajectory solve_semi_implicit(const Objective& obj, const Mat& R, int N, const Vec& x0,
                                       const StackedSolveOptions& options = {});

}  // namespace ocpopt
