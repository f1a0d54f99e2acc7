#include "ocpopt/solvers.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace ocpopt {

void AdaptPolicy::validate() const {
  if (!(rho > 1.0) || !std::isfinite(rho)) throw BadParams("adapt.rho must be > 1");
  if (max_retries < 0) throw BadParams("adapt.max_retries must be >= 0");
}

OcpParams OcpParams::scalar(double r, int N, Eigen::Index dim) {
  OcpParams p;
  p.R = r * Mat::Identity(dim, dim);
  p.N = N;
  return p;
}

void OcpParams::validate() const {
  if (R.size() == 0) throw BadParams("R must be non-empty");
  if (N < 0) throw BadParams("N must be >= 0");
  if (!(grad_tol >= 0.0)) throw BadParams("grad_tol must be >= 0");
  if (max_outer < 0) throw BadParams("max_outer must be >= 0");
  adapt.validate();
  Cholesky check(R);
}

void GdParams::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw BadParams("lr must be > 0");
  if (!(grad_tol >= 0.0)) throw BadParams("grad_tol must be >= 0");
  if (max_outer < 0) throw BadParams("max_outer must be >= 0");
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::GradTol: return "GradTol";
    case Termination::MaxOuter: return "MaxOuter";
    case Termination::StepFailure: return "StepFailure";
    case Termination::PassComplete: return "PassComplete";
  }
  return "?";
}

std::string_view to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::Unified: return "unified";
    case SolverKind::Annealed: return "annealed";
    case SolverKind::Newton: return "newton";
    case SolverKind::GradientDescent: return "gd";
  }
  return "?";
}

SolverKind parse_solver_kind(std::string_view name) {
  if (name == "unified") return SolverKind::Unified;
  if (name == "annealed") return SolverKind::Annealed;
  if (name == "newton") return SolverKind::Newton;
  if (name == "gd") return SolverKind::GradientDescent;
  throw BadParams("unknown solver kind '" + std::string(name) + "'");
}

Vec gbar_from(const Vec& grad, const Mat& hess, const Mat& R, int depth, int* linear_solves) {
  if (depth < 1) throw BadParams("gbar depth must be >= 1");
  if (hess.rows() != grad.size() || R.rows() != grad.size()) {
    throw DimensionMismatch("gbar: gradient, Hessian and R sizes disagree");
  }
  const Cholesky step_matrix(R + hess);
  Vec g = step_matrix.solve(grad);
  for (int level = 1; level < depth; ++level) {
    g = step_matrix.solve(grad + R * g);
  }
  if (linear_solves) *linear_solves += depth;
  return g;
}

Vec gbar(const Objective& obj, const Vec& x, const Mat& R, int depth) {
  const Vec grad = obj.grad(x);
  const Mat hess = obj.hess(x);
  try {
    return gbar_from(grad, hess, R, depth);
  } catch (const StepMatrixNotPD&) {
    throw;
  } catch (const NotPositiveDefinite& e) {
    throw StepMatrixNotPD(x, e.pivot_index(), e.pivot_value());
  }
}

AdaptiveStep adaptive_gbar(const Vec& x, const Vec& grad, const Mat& hess, const Mat& R, int depth,
                           const AdaptPolicy& policy) {
  const int attempts = policy.enabled ? policy.max_retries + 1 : 1;
  AdaptiveStep out;
  Mat weight = R;
  for (int attempt = 0;; ++attempt) {
    try {
      out.step = gbar_from(grad, hess, weight, depth, &out.linear_solves);
      out.retries = attempt;
      return out;
    } catch (const NotPositiveDefinite& e) {
      if (attempt + 1 >= attempts) throw StepMatrixNotPD(x, e.pivot_index(), e.pivot_value());
    }
    weight *= policy.rho;
  }
}

namespace {

std::string describe_failure(const char* what, const Vec& x, const NotPositiveDefinite& e) {
  std::ostringstream os;
  os.precision(17);
  os << what << " at x = [";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << "] (pivot " << e.pivot_index() << " = " << e.pivot_value() << ")";
  return os.str();
}

// Shared outer loop. `step_fn(k, x, grad)` returns the diagnostic for step k
// with `step` filled, or throws NotPositiveDefinite.
template <typename StepFn>
Trajectory drive(const Objective& obj, const Vec& x0, double grad_tol, int max_outer,
                 int pass_length, StepFn&& step_fn) {
  if (x0.size() != obj.dim) throw DimensionMismatch("x0 has wrong dimension");
  if (!x0.allFinite()) throw BadParams("x0 must be finite");

  Trajectory traj;
  Vec x = x0;
  double f = obj.eval(x);
  Vec g = obj.grad(x);
  if (!std::isfinite(f) || !g.allFinite()) {
    throw NonFiniteEvaluation("objective is not finite at x0");
  }
  traj.iterates.push_back(x);
  traj.f_values.push_back(f);

  for (;;) {
    const double gnorm = g.norm();
    traj.final_grad_norm = gnorm;
    if (gnorm <= grad_tol) {
      traj.termination = Termination::GradTol;
      break;
    }
    if (static_cast<int>(traj.steps()) >= max_outer) {
      traj.termination = Termination::MaxOuter;
      break;
    }
    if (pass_length > 0 && static_cast<int>(traj.steps()) >= pass_length) {
      traj.termination = Termination::PassComplete;
      break;
    }

    StepDiag diag;
    try {
      diag = step_fn(static_cast<int>(traj.steps()), x, g);
    } catch (const NotPositiveDefinite& e) {
      traj.termination = Termination::StepFailure;
      traj.failure = describe_failure("step matrix not positive definite", x, e);
      break;
    }
    diag.grad_norm = gnorm;

    Vec next = x - diag.step;
    double f_next = next.allFinite() ? obj.eval(next) : std::nan("");
    Vec g_next = std::isfinite(f_next) ? obj.grad(next) : Vec();
    if (!std::isfinite(f_next) || !g_next.allFinite()) {
      traj.termination = Termination::StepFailure;
      traj.failure = "non-finite iterate or objective value after step " +
                     std::to_string(traj.steps());
      break;
    }
    traj.diags.push_back(std::move(diag));
    x = std::move(next);
    g = std::move(g_next);
    traj.iterates.push_back(x);
    traj.f_values.push_back(f_next);
  }
  return traj;
}

void check_weight_dim(const Objective& obj, const OcpParams& params) {
  if (params.R.rows() != obj.dim || params.R.cols() != obj.dim) {
    throw DimensionMismatch("R dimension does not match the objective");
  }
}

}  // namespace

Trajectory unified_solve(const Objective& obj, const OcpParams& params, const Vec& x0) {
  params.validate();
  check_weight_dim(obj, params);
  const int depth = params.N + 1;
  return drive(obj, x0, params.grad_tol, params.max_outer, 0,
               [&](int, const Vec& x, const Vec& g) {
                 const AdaptiveStep s = adaptive_gbar(x, g, obj.hess(x), params.R, depth,
                                                      params.adapt);
                 return StepDiag{s.step, depth, s.retries, 0.0, s.linear_solves};
               });
}

Trajectory annealed_solve(const Objective& obj, const OcpParams& params, const Vec& x0) {
  params.validate();
  check_weight_dim(obj, params);
  const int pass = params.N + 1;
  return drive(obj, x0, params.grad_tol, params.max_outer, params.repeat_passes ? 0 : pass,
               [&](int step_index, const Vec& x, const Vec& g) {
                 const int k = step_index % pass;
                 const int depth = params.N - k + 1;
                 const AdaptiveStep s = adaptive_gbar(x, g, obj.hess(x), params.R, depth,
                                                      params.adapt);
                 return StepDiag{s.step, depth, s.retries, 0.0, s.linear_solves};
               });
}

Trajectory newton_solve(const Objective& obj, const OcpParams& params, const Vec& x0) {
  if (!(params.grad_tol >= 0.0)) throw BadParams("grad_tol must be >= 0");
  if (params.max_outer < 0) throw BadParams("max_outer must be >= 0");
  return drive(obj, x0, params.grad_tol, params.max_outer, 0,
               [&](int, const Vec& x, const Vec& g) {
                 Vec step = solve_spd(obj.hess(x), g);
                 return StepDiag{std::move(step), 1, 0, 0.0, 1};
               });
}

Trajectory gd_solve(const Objective& obj, const GdParams& params, const Vec& x0) {
  params.validate();
  return drive(obj, x0, params.grad_tol, params.max_outer, 0,
               [&](int, const Vec&, const Vec& g) {
                 return StepDiag{params.lr * g, 1, 0, 0.0, 0};
               });
}

Trajectory run_solver(const SolverSpec& spec, const Objective& obj, const Vec& x0) {
  switch (spec.kind) {
    case SolverKind::Unified: return unified_solve(obj, spec.ocp, x0);
    case SolverKind::Annealed: return annealed_solve(obj, spec.ocp, x0);
    case SolverKind::Newton: return newton_solve(obj, spec.ocp, x0);
    case SolverKind::GradientDescent: return gd_solve(obj, spec.gd, x0);
  }
  throw BadParams("unknown solver kind");
}

}  // namespace ocpopt
