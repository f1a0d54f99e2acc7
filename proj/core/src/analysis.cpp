#include "ocpopt/analysis.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace ocpopt {

namespace {

std::vector<double> positive_spectrum(const Mat& hess, double r, int N) {
  if (!(r > 0.0) || !std::isfinite(r)) throw BadParams("r must be > 0");
  if (N < 0) throw BadParams("N must be >= 0");
  require_symmetric(hess);
  const Eigen::SelfAdjointEigenSolver<Mat> eig(hess, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw Error("eigenvalue computation failed");
  std::vector<double> out(eig.eigenvalues().data(),
                          eig.eigenvalues().data() + eig.eigenvalues().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] > 0.0)) throw NotPositiveDefinite(static_cast<Eigen::Index>(i), out[i]);
  }
  return out;
}

}  // namespace

ContractionConstant theoretical_constant(const Mat& hess_at_star, double r, int N) {
  ContractionConstant out;
  out.eigenvalues = positive_spectrum(hess_at_star, r, N);
  for (double lambda : out.eigenvalues) {
    const double c = std::pow(r / (r + lambda), N + 1);
    out.per_mode.push_back(c);
    out.overall = std::max(out.overall, c);
  }
  return out;
}

PassFactors single_pass_factors(const Mat& hess_at_star, double r, int N) {
  PassFactors out;
  out.eigenvalues = positive_spectrum(hess_at_star, r, N);
  out.product.assign(out.eigenvalues.size(), 1.0);
  for (int i = 0; i <= N; ++i) {
    std::vector<double> step;
    for (std::size_t m = 0; m < out.eigenvalues.size(); ++m) {
      const double f = std::pow(r / (r + out.eigenvalues[m]), N - i + 1);
      step.push_back(f);
      out.product[m] *= f;
    }
    out.factors.push_back(std::move(step));
  }
  return out;
}

RateReport empirical_rate(const Trajectory& traj, const Vec& x_star, int tail,
                          std::optional<ContractionConstant> theory) {
  if (tail < 1) throw BadParams("tail must be >= 1");
  const double floor = 100.0 * std::numeric_limits<double>::epsilon();
  std::vector<double> errors;
  for (const Vec& x : traj.iterates) {
    if (x.size() != x_star.size()) throw DimensionMismatch("x_star has wrong dimension");
    const double e = (x - x_star).norm();
    if (!(e > floor)) break;
    errors.push_back(e);
  }
  if (errors.size() < 4) {
    throw InsufficientData("need at least 3 consecutive error ratios above roundoff, have " +
                           std::to_string(errors.empty() ? 0 : errors.size() - 1));
  }
  const std::size_t ratios = errors.size() - 1;
  const std::size_t used = std::min<std::size_t>(static_cast<std::size_t>(tail), ratios);
  double log_sum = 0.0;
  for (std::size_t k = errors.size() - 1 - used; k + 1 < errors.size(); ++k) {
    log_sum += std::log(errors[k + 1] / errors[k]);
  }

  RateReport report;
  report.empirical_ratio = std::exp(log_sum / static_cast<double>(used));
  report.samples_used = static_cast<int>(used);
  if (theory) {
    report.theoretical_constant = theory->overall;
    report.per_mode_constants = theory->per_mode;
    report.relative_gap =
        std::abs(report.empirical_ratio - theory->overall) / theory->overall;
  } else {
    report.theoretical_constant = std::numeric_limits<double>::quiet_NaN();
    report.relative_gap = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

bool PhiProbe::phi_prime_matches(double tol) const {
  return std::abs(phi_prime_at_star - expected_phi_prime) <= tol;
}

bool PhiProbe::bound_holds_strictly() const { return std::abs(phi_second_at_star) < bound; }

PhiProbe phi_probe(const Objective& obj, double r, int N, double x_star) {
  if (obj.dim != 1) throw DimensionMismatch("phi_probe needs a scalar problem");
  if (!(r > 0.0)) throw BadParams("r must be > 0");
  if (N < 0) throw BadParams("N must be >= 0");

  const Mat weight = Mat::Constant(1, 1, r);
  const ScalarField phi = [&](const Vec& x) { return x[0] - gbar(obj, x, weight, N + 1)[0]; };
  const Vec at = Vec::Constant(1, x_star);

  const double curvature = obj.hess(at)(0, 0);
  if (!(curvature > 0.0)) throw NotPositiveDefinite(0, curvature);
  const double third =
      obj.has_third()
          ? obj.third(x_star)
          : fd_third([&](double t) { return obj.eval(Vec::Constant(1, t)); }, x_star);

  PhiProbe probe;
  probe.phi_prime_at_star = fd_gradient(phi, at)[0];
  probe.phi_second_at_star = fd_hessian(phi, at)(0, 0);
  probe.bound = std::abs(third / curvature);
  probe.expected_phi_prime = std::pow(r / (r + curvature), N + 1);
  return probe;
}

const ComparisonRow* ComparisonTable::find(const std::string& label) const {
  for (const auto& row : rows) {
    if (row.solver == label) return &row;
  }
  return nullptr;
}

ComparisonRow summarize(const std::string& label, const Trajectory& traj,
                        const EvalCounters& counters) {
  ComparisonRow row;
  row.solver = label;
  row.iterations = static_cast<int>(traj.steps());
  for (const auto& d : traj.diags) row.linear_solves += d.linear_solves;
  row.final_f = traj.f_values.back();
  row.final_grad_norm = traj.final_grad_norm;
  row.termination = traj.termination;
  row.gradient_evals = counters.grads.load();
  row.hessian_evals = counters.hessians.load();
  return row;
}

ComparisonTable compare(const std::vector<SolverSpec>& solvers, const Objective& obj,
                        const Vec& x0) {
  ComparisonTable table;
  table.problem = obj.name;
  for (const auto& spec : solvers) {
    EvalCounters counters;
    const Objective counted = instrument(obj, counters);
    const std::string label = spec.label.empty() ? std::string(to_string(spec.kind)) : spec.label;
    try {
      table.rows.push_back(summarize(label, run_solver(spec, counted, x0), counters));
    } catch (const Error&) {
      ComparisonRow row;
      row.solver = label;
      row.termination = Termination::StepFailure;
      row.final_f = std::numeric_limits<double>::quiet_NaN();
      row.final_grad_norm = std::numeric_limits<double>::quiet_NaN();
      row.gradient_evals = counters.grads.load();
      row.hessian_evals = counters.hessians.load();
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

}  // namespace ocpopt
