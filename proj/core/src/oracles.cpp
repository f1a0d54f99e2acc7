#include "ocpopt/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include <Eigen/LU>

#include "ocpopt/solvers.hpp"

namespace ocpopt {

namespace {

void check_horizon(const Objective& obj, const Mat& R, int N, const Vec& x0, int max_N,
                   Eigen::Index max_dim) {
  if (N < 0) throw BadParams("N must be >= 0");
  if (N > max_N) throw BadParams("N must be <= " + std::to_string(max_N) + " for this oracle");
  if (obj.dim > max_dim) {
    throw BadParams("dimension must be <= " + std::to_string(max_dim) + " for this oracle");
  }
  if (x0.size() != obj.dim) throw DimensionMismatch("x0 has wrong dimension");
  if (R.rows() != obj.dim || R.cols() != obj.dim) {
    throw DimensionMismatch("R dimension does not match the objective");
  }
  Cholesky check(R);
}

// x_0 followed by the n(N+1) unknowns, split into N+2 states.
std::vector<Vec> unpack_states(const Vec& x0, const Vec& stacked) {
  const Eigen::Index n = x0.size();
  const Eigen::Index count = stacked.size() / n;
  std::vector<Vec> states;
  states.reserve(static_cast<std::size_t>(count + 1));
  states.push_back(x0);
  for (Eigen::Index k = 0; k < count; ++k) states.emplace_back(stacked.segment(k * n, n));
  return states;
}

Vec pack_tail(const std::vector<Vec>& states) {
  const Eigen::Index n = states.front().size();
  Vec out(n * static_cast<Eigen::Index>(states.size() - 1));
  for (std::size_t k = 1; k < states.size(); ++k) {
    out.segment(static_cast<Eigen::Index>(k - 1) * n, n) = states[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force control problem
// ---------------------------------------------------------------------------

struct StackedCost {
  const Objective& obj;
  const Mat& R;
  Vec x0;
  int N;
  double w;

  Eigen::Index n() const { return x0.size(); }

  std::vector<Vec> states(const Vec& u) const {
    std::vector<Vec> xs;
    xs.reserve(static_cast<std::size_t>(N + 2));
    xs.push_back(x0);
    for (int k = 0; k <= N; ++k) xs.push_back(xs.back() + u.segment(k * n(), n()));
    return xs;
  }

  double cost(const Vec& u) const {
    const auto xs = states(u);
    double j = 0.0;
    for (const Vec& x : xs) j += obj.eval(x);
    for (int k = 0; k <= N; ++k) {
      const auto uk = u.segment(k * n(), n());
      j += w * uk.dot(R * uk);
    }
    return j;
  }

  // dJ/du_j = 2 w R u_j + sum_{k=j+1}^{N+1} grad f(x_k)
  Vec gradient(const Vec& u) const {
    const auto xs = states(u);
    Vec g(u.size());
    Vec suffix = Vec::Zero(n());
    for (int j = N; j >= 0; --j) {
      suffix += obj.grad(xs[static_cast<std::size_t>(j + 1)]);
      g.segment(j * n(), n()) = 2.0 * w * R * u.segment(j * n(), n()) + suffix;
    }
    return g;
  }

  // Block (j, l) = 2 w R delta_jl + sum_{k > max(j, l)} H(x_k)
  Mat hessian(const Vec& u) const {
    const auto xs = states(u);
    const Eigen::Index m = u.size();
    Mat h = Mat::Zero(m, m);
    Mat suffix = Mat::Zero(n(), n());
    for (int j = N; j >= 0; --j) {
      suffix += obj.hess(xs[static_cast<std::size_t>(j + 1)]);
      // suffix now holds sum_{k >= j+1} H(x_k): the value for every block
      // whose larger index is j.
      for (int l = 0; l <= j; ++l) {
        h.block(j * n(), l * n(), n(), n()) = suffix;
        h.block(l * n(), j * n(), n(), n()) = suffix;
      }
      h.block(j * n(), j * n(), n(), n()) += 2.0 * w * R;
    }
    return 0.5 * (h + h.transpose());
  }
};

// Backtracking along `dir`; returns false when no decrease is found.
bool armijo(const StackedCost& J, Vec& u, double& cost, const Vec& grad, const Vec& dir) {
  const double slope = grad.dot(dir);
  if (!(slope < 0.0)) return false;
  double t = 1.0;
  for (int i = 0; i < 60; ++i, t *= 0.5) {
    const Vec trial = u + t * dir;
    const double c = J.cost(trial);
    if (std::isfinite(c) && c <= cost + 1e-4 * t * slope) {
      u = trial;
      cost = c;
      return true;
    }
  }
  return false;
}

}  // namespace

ControlSolution solve_ocp_bruteforce(const Objective& obj, const Mat& R, int N, const Vec& x0,
                                     bool half_weight, const ControlOracleOptions& options) {
  check_horizon(obj, R, N, x0, 10, 5);
  const StackedCost J{obj, R, x0, N, half_weight ? 0.5 : 1.0};
  const Eigen::Index m = x0.size() * (N + 1);

  Vec u = Vec::Zero(m);
  double cost = J.cost(u);
  Vec grad = J.gradient(u);
  int iterations = 0;

  // Gradient descent until the residual is small enough for Newton to take over.
  constexpr double kPolishThreshold = 1e-3;
  for (int it = 0; it < options.max_gradient_steps; ++it) {
    if (grad.lpNorm<Eigen::Infinity>() <= std::max(kPolishThreshold, options.tolerance)) break;
    ++iterations;
    if (!armijo(J, u, cost, grad, -grad)) break;
    grad = J.gradient(u);
  }

  // Newton polish on the stacked system.
  for (int it = 0; it < options.max_newton_steps; ++it) {
    if (grad.lpNorm<Eigen::Infinity>() <= options.tolerance) break;
    ++iterations;
    Vec dir;
    try {
      dir = -Cholesky(J.hessian(u)).solve(grad);
    } catch (const NotPositiveDefinite&) {
      dir = -grad;
    }
    if (!armijo(J, u, cost, grad, dir)) {
      // Armijo cannot see decreases below roundoff; take the full Newton step
      // when it still reduces the stationarity residual.
      const Vec trial = u + dir;
      const Vec trial_grad = J.gradient(trial);
      if (!(trial_grad.lpNorm<Eigen::Infinity>() < grad.lpNorm<Eigen::Infinity>())) break;
      u = trial;
      cost = J.cost(u);
    }
    grad = J.gradient(u);
  }

  const double residual = grad.lpNorm<Eigen::Infinity>();
  if (!(residual <= options.tolerance)) {
    throw OracleNoConverge("brute-force control oracle did not reach stationarity", residual);
  }

  ControlSolution sol;
  sol.half_weight = half_weight;
  sol.states = J.states(u);
  for (int k = 0; k <= N; ++k) sol.controls.emplace_back(u.segment(k * x0.size(), x0.size()));
  sol.cost = cost;
  sol.stationarity_residual = residual;
  sol.iterations = iterations;
  return sol;
}

CostOptimalityReport check_cost_optimality(const ControlSolution& sol, const Objective& obj, const Mat& R) {
  if (sol.states.size() != sol.controls.size() + 1) {
    throw DimensionMismatch("control solution must have one more state than controls");
  }
  const Cholesky weight(R);
  const std::size_t horizon = sol.controls.size();
  CostOptimalityReport report;
  Vec suffix = Vec::Zero(R.rows());
  for (std::size_t k = horizon; k-- > 0;) {
    suffix += obj.grad(sol.states[k + 1]);
    const Vec law = weight.solve(suffix);
    report.max_violation =
        std::max(report.max_violation, (sol.controls[k] + law).lpNorm<Eigen::Infinity>());
    report.max_violation_doubled_weight = std::max(
        report.max_violation_doubled_weight, (sol.controls[k] + 0.5 * law).lpNorm<Eigen::Infinity>());
  }
  report.factor_two_signature = report.max_violation_doubled_weight < report.max_violation;
  return report;
}

namespace {

// ---------------------------------------------------------------------------
// Stacked nonlinear systems
// ---------------------------------------------------------------------------

using StackedResidual = std::function<Vec(const Vec&)>;
using StackedMap = std::function<Vec(const Vec&)>;

double inf_norm(const Vec& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

Mat fd_jacobian(const StackedResidual& F, const Vec& x) {
  const Eigen::Index m = x.size();
  Mat jac(m, m);
  Vec probe = x;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double h = 1e-4 * std::max(1.0, std::abs(x[j]));
    probe[j] = x[j] + h;
    const Vec fp = F(probe);
    probe[j] = x[j] - h;
    const Vec fm = F(probe);
    probe[j] = x[j];
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

struct StackedResult {
  Vec x;
  double residual = 0.0;
  int newton = 0;
  int fixed_point = 0;
};

// Newton steps with backtracking; returns false on stall.
bool newton_step(const StackedResidual& F, Vec& x, Vec& fx, double& res) {
  const Mat jac = fd_jacobian(F, x);
  if (!jac.allFinite()) return false;
  const Eigen::FullPivLU<Mat> lu(jac);
  if (!lu.isInvertible()) return false;
  const Vec dx = lu.solve(-fx);
  if (!dx.allFinite()) return false;
  double t = 1.0;
  for (int i = 0; i < 30; ++i, t *= 0.5) {
    const Vec trial = x + t * dx;
    const Vec ft = F(trial);
    const double rt = inf_norm(ft);
    if (std::isfinite(rt) && rt < res) {
      x = trial;
      fx = ft;
      res = rt;
      return true;
    }
  }
  return false;
}

// Damped sweeps x <- x + d (T(x) - x), halving d whenever the residual grows.
bool fixed_point_block(const StackedResidual& F, const StackedMap& T, Vec& x, Vec& fx,
                       double& res, double& damping, int max_sweeps, int& used, double tol) {
  for (int i = 0; i < max_sweeps && res > tol; ++i) {
    ++used;
    Vec trial = x + damping * (T(x) - x);
    Vec ft = trial.allFinite() ? F(trial) : Vec();
    const double rt = ft.size() ? inf_norm(ft) : std::numeric_limits<double>::infinity();
    if (std::isfinite(rt) && rt <= res) {
      x = std::move(trial);
      fx = std::move(ft);
      res = rt;
    } else {
      damping *= 0.5;
      if (damping < 1e-12) return false;
    }
  }
  return res <= tol;
}

StackedResult solve_stacked(const StackedResidual& F, const StackedMap& T, Vec x,
                            const StackedSolveOptions& options, bool newton_first,
                            double initial_damping) {
  StackedResult out;
  Vec fx = F(x);
  double res = inf_norm(fx);
  double damping = initial_damping;
  bool use_newton = newton_first;
  constexpr int kBlock = 200;

  while (res > options.tolerance) {
    const bool newton_left = out.newton < options.max_newton;
    const bool fp_left = out.fixed_point < options.max_fixed_point;
    if (!newton_left && !fp_left) break;
    if (use_newton && newton_left) {
      ++out.newton;
      if (!newton_step(F, x, fx, res)) use_newton = false;
      continue;
    }
    if (!fp_left) {
      use_newton = true;
      continue;
    }
    const int budget = std::min(kBlock, options.max_fixed_point - out.fixed_point);
    const bool ok = fixed_point_block(F, T, x, fx, res, damping, budget, out.fixed_point,
                                      options.tolerance);
    if (ok) break;
    // Hand over to Newton; restore the damping for later blocks.
    if (damping < 1e-12) damping = initial_damping;
    use_newton = newton_left;
    if (!use_newton && !fp_left) break;
  }
  out.x = std::move(x);
  out.residual = res;
  return out;
}

std::vector<Vec> annealed_guess(const Objective& obj, const Mat& R, int N, const Vec& x0) {
  OcpParams params;
  params.R = R;
  params.N = N;
  params.grad_tol = std::numeric_limits<double>::min();
  params.max_outer = N + 1;
  params.repeat_passes = false;
  std::vector<Vec> states = annealed_solve(obj, params, x0).iterates;
  // A pass that stops early (zero gradient or step failure) holds its last state.
  while (static_cast<int>(states.size()) < N + 2) states.push_back(states.back());
  return states;
}

Vec implicit_residual_vec(const Objective& obj, const Cholesky& weight,
                          const std::vector<Vec>& states) {
  const Eigen::Index n = states.front().size();
  const auto steps = static_cast<Eigen::Index>(states.size() - 1);
  Vec F(n * steps);
  Vec suffix = Vec::Zero(n);
  for (Eigen::Index k = steps - 1; k >= 0; --k) {
    const auto ku = static_cast<std::size_t>(k);
    suffix += obj.grad(states[ku + 1]);
    F.segment(k * n, n) = states[ku + 1] - states[ku] + weight.solve(suffix);
  }
  return F;
}

// g_k for k = 0..N from states x_0..x_N.
std::vector<Vec> semi_implicit_steps(const Objective& obj, const Mat& R,
                                     const std::vector<Vec>& states) {
  const std::size_t horizon = states.size() - 1;  // N + 1 steps
  std::vector<Vec> g(horizon);
  const Eigen::Index n = states.front().size();
  Vec tail = Vec::Zero(n);  // sum_{i=k+1}^{N} (grad_i - H_i g_i)
  for (std::size_t k = horizon; k-- > 0;) {
    const Vec grad = obj.grad(states[k]);
    const Mat hess = obj.hess(states[k]);
    g[k] = Cholesky(R + hess).solve(grad + tail);
    tail += grad - hess * g[k];
  }
  return g;
}

Vec semi_implicit_residual_vec(const Objective& obj, const Mat& R,
                               const std::vector<Vec>& states) {
  const std::vector<Vec> g = semi_implicit_steps(obj, R, states);
  const Eigen::Index n = states.front().size();
  Vec F(n * static_cast<Eigen::Index>(g.size()));
  for (std::size_t k = 0; k < g.size(); ++k) {
    F.segment(static_cast<Eigen::Index>(k) * n, n) = states[k + 1] - states[k] + g[k];
  }
  return F;
}

ImplicitTrajectory finish(const Vec& x0, const StackedResult& r, const char* name,
                          const StackedSolveOptions& options) {
  if (!(r.residual <= options.tolerance)) {
    throw OracleNoConverge(std::string(name) + " oracle did not converge", r.residual);
  }
  ImplicitTrajectory out;
  out.states = unpack_states(x0, r.x);
  out.residual = r.residual;
  out.newton_iterations = r.newton;
  out.fixed_point_iterations = r.fixed_point;
  out.iterations_used = r.newton + r.fixed_point;
  return out;
}

}  // namespace

double implicit_residual(const Objective& obj, const Mat& R, const std::vector<Vec>& states) {
  if (states.size() < 2) throw DimensionMismatch("need at least two states");
  return inf_norm(implicit_residual_vec(obj, Cholesky(R), states));
}

double semi_implicit_residual(const Objective& obj, const Mat& R, const std::vector<Vec>& states) {
  if (states.size() < 2) throw DimensionMismatch("need at least two states");
  return inf_norm(semi_implicit_residual_vec(obj, R, states));
}

ImplicitTrajectory solve_implicit(const Objective& obj, const Mat& R, int N, const Vec& x0,
                                  const StackedSolveOptions& options) {
  check_horizon(obj, R, N, x0, 50, 10);
  const Cholesky weight(R);

  const StackedResidual F = [&](const Vec& tail) {
    return implicit_residual_vec(obj, weight, unpack_states(x0, tail));
  };
  // Forward sweep with the gradients of the current guess.
  const StackedMap T = [&](const Vec& tail) {
    const auto states = unpack_states(x0, tail);
    const Eigen::Index n = x0.size();
    std::vector<Vec> suffix(states.size());
    suffix.back() = Vec::Zero(n);
    for (std::size_t k = states.size() - 1; k-- > 0;) {
      suffix[k] = suffix[k + 1] + obj.grad(states[k + 1]);
    }
    std::vector<Vec> next(states.size());
    next[0] = x0;
    for (std::size_t k = 0; k + 1 < states.size(); ++k) {
      next[k + 1] = next[k] - weight.solve(suffix[k]);
    }
    return pack_tail(next);
  };

  const Vec guess = pack_tail(annealed_guess(obj, R, N, x0));
  return finish(x0, solve_stacked(F, T, guess, options, /*newton_first=*/true, 0.5), "implicit",
                options);
}

ImplicitTrajectory solve_semi_implicit(const Objective& obj, const Mat& R, int N, const Vec& x0,
                                       const StackedSolveOptions& options) {
  check_horizon(obj, R, N, x0, 50, 10);

  const StackedResidual F = [&](const Vec& tail) {
    try {
      return semi_implicit_residual_vec(obj, R, unpack_states(x0, tail));
    } catch (const NotPositiveDefinite&) {
      return Vec(Vec::Constant(tail.size(), std::numeric_limits<double>::infinity()));
    }
  };
  const StackedMap T = [&](const Vec& tail) {
    const auto states = unpack_states(x0, tail);
    std::vector<Vec> g;
    try {
      g = semi_implicit_steps(obj, R, states);
    } catch (const NotPositiveDefinite&) {
      return Vec(Vec::Constant(tail.size(), std::numeric_limits<double>::quiet_NaN()));
    }
    std::vector<Vec> next(states.size());
    next[0] = x0;
    for (std::size_t k = 0; k < g.size(); ++k) next[k + 1] = next[k] - g[k];
    return pack_tail(next);
  };

  const Vec guess = pack_tail(annealed_guess(obj, R, N, x0));
  return finish(x0, solve_stacked(F, T, guess, options, /*newton_first=*/false, 1.0),
                "semi-implicit", options);
}

}  // namespace ocpopt
