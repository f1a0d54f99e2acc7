#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "ocpopt/analysis.hpp"
#include "support/test_oracles.hpp"

namespace ocpopt {
namespace {

Vec scalar(double v) { return Vec::Constant(1, v); }

Problem quadratic1d(double a = 1.0, double b = 0.0) {
  return builtin("quadratic1d", {{{"a", a}, {"b", b}}, {}, 0});
}

Problem quadratic_nd(std::vector<double> spectrum, std::uint64_t seed = 3) {
  ProblemParams p;
  p.lists["spectrum"] = std::move(spectrum);
  p.seed = seed;
  return builtin("quadratic_nd", p);
}

TEST(TheoreticalConstant, Examples) {
  EXPECT_DOUBLE_EQ(theoretical_constant(Mat::Identity(1, 1), 1.0, 1).overall, 0.25);
  EXPECT_LT(theoretical_constant(Mat::Identity(1, 1), 1e-12, 0).overall, 1e-11);

  Mat h = Mat::Zero(2, 2);
  h.diagonal() << 100.0, 1.0;
  const ContractionConstant c = theoretical_constant(h, 1.0, 10);
  ASSERT_EQ(c.per_mode.size(), 2u);
  EXPECT_DOUBLE_EQ(c.eigenvalues[0], 1.0);
  EXPECT_DOUBLE_EQ(c.per_mode[0], std::pow(0.5, 11));
  EXPECT_DOUBLE_EQ(c.per_mode[1], std::pow(1.0 / 101.0, 11));
  EXPECT_DOUBLE_EQ(c.overall, std::pow(0.5, 11));
}

TEST(TheoreticalConstant, Errors) {
  Mat h = Mat::Identity(2, 2);
  h(1, 1) = -1.0;
  EXPECT_THROW(theoretical_constant(h, 1.0, 1), NotPositiveDefinite);
  EXPECT_THROW(theoretical_constant(Mat::Identity(1, 1), 0.0, 1), BadParams);
  EXPECT_THROW(theoretical_constant(Mat::Identity(1, 1), 1.0, -1), BadParams);
}

TEST(TheoreticalConstant, MonotoneInHorizonAndWeight) {
  const std::vector<double> rs = {0.01, 0.1, 1.0, 10.0};
  const Mat h = Mat::Identity(1, 1);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    for (int N = 0; N <= 10; ++N) {
      const double c = theoretical_constant(h, rs[i], N).overall;
      if (N < 10) EXPECT_LT(theoretical_constant(h, rs[i], N + 1).overall, c);
      if (i + 1 < rs.size()) EXPECT_GT(theoretical_constant(h, rs[i + 1], N).overall, c);
    }
  }
}

TEST(SinglePassFactors, Examples) {
  const PassFactors f = single_pass_factors(Mat::Identity(1, 1), 1.0, 5);
  ASSERT_EQ(f.factors.size(), 6u);
  for (int i = 0; i <= 5; ++i) EXPECT_DOUBLE_EQ(f.factors[i][0], std::pow(0.5, 6 - i));
  EXPECT_DOUBLE_EQ(f.product[0], std::ldexp(1.0, -21));

  const PassFactors single = single_pass_factors(2.0 * Mat::Identity(1, 1), 3.0, 0);
  ASSERT_EQ(single.factors.size(), 1u);
  EXPECT_DOUBLE_EQ(single.factors[0][0], 0.6);

  const PassFactors stall = single_pass_factors(Mat::Identity(1, 1), 1e6, 3);
  for (const auto& step : stall.factors) EXPECT_GT(step[0], 0.9999);
}

TEST(SinglePassFactors, SinglePassProductIsExactOnQuadratics) {
  for (double a : {0.5, 1.0, 4.0}) {
    for (double r : {0.1, 1.0, 10.0}) {
      for (int N : {0, 1, 3, 5}) {
        OcpParams params = OcpParams::scalar(r, N, 1);
        params.repeat_passes = false;
        params.grad_tol = 0.0;
        const Trajectory t = annealed_solve(quadratic1d(a).objective, params, scalar(1.0));
        const PassFactors pf = single_pass_factors(a * Mat::Identity(1, 1), r, N);
        // x - gbar cancels to about eps / factor relative accuracy per step
        if (pf.factors.front()[0] < 1e-5) continue;
        const double expected = pf.product[0];
        EXPECT_NEAR(std::abs(t.final_iterate()[0]), expected, 1e-10 * expected)
            << a << " " << r << " " << N;
      }
    }
  }
}

TEST(EmpiricalRate, ScalarQuadratic) {
  OcpParams params = OcpParams::scalar(1.0, 1, 1);
  const Trajectory t = unified_solve(quadratic1d().objective, params, scalar(1.0));
  const RateReport r =
      empirical_rate(t, scalar(0.0), 6, theoretical_constant(Mat::Identity(1, 1), 1.0, 1));
  EXPECT_NEAR(r.empirical_ratio, 0.25, 1e-10);
  EXPECT_EQ(r.samples_used, 6);
  EXPECT_LE(r.relative_gap, 1e-10);
}

TEST(EmpiricalRate, NewtonOnQuadraticHasTooFewRatios) {
  const Trajectory t =
      newton_solve(quadratic1d().objective, OcpParams::scalar(1.0, 0, 1), scalar(1.0));
  EXPECT_THROW(empirical_rate(t, scalar(0.0)), InsufficientData);
}

TEST(EmpiricalRate, NoTheoryGivesNaN) {
  OcpParams params = OcpParams::scalar(1.0, 0, 1);
  const Trajectory t = unified_solve(quadratic1d().objective, params, scalar(1.0));
  const RateReport r = empirical_rate(t, scalar(0.0));
  EXPECT_NEAR(r.empirical_ratio, 0.5, 1e-12);
  EXPECT_TRUE(std::isnan(r.theoretical_constant));
  EXPECT_THROW(empirical_rate(t, scalar(0.0), 0), BadParams);
  EXPECT_THROW(empirical_rate(t, Vec::Zero(2)), DimensionMismatch);
}

TEST(EmpiricalRate, MatchesTheoryOnQuadraticsWithScalarWeight) {
  // Starting far out keeps enough error ratios above roundoff for strong
  // contractions; the map is affine so the ratio does not depend on scale.
  for (const auto& spectrum :
       std::vector<std::vector<double>>{{1.0}, {0.5, 2.0}, {1.0, 3.0, 9.0}}) {
    const Problem p = quadratic_nd(spectrum);
    const auto dim = static_cast<Eigen::Index>(spectrum.size());
    for (double r : {0.1, 1.0, 10.0}) {
      for (int N : {0, 1, 3}) {
        OcpParams params = OcpParams::scalar(r, N, dim);
        params.grad_tol = 0.0;
        params.max_outer = 8;
        // along the slowest eigenvector, the direction the tail selects
        const Eigen::SelfAdjointEigenSolver<Mat> eig(p.minimizer->hess_at_star);
        const Vec x0 = 1e60 * eig.eigenvectors().col(0);
        const Trajectory t = unified_solve(p.objective, params, x0);
        const auto theory = theoretical_constant(p.minimizer->hess_at_star, r, N);
        const RateReport rep = empirical_rate(t, p.minimizer->x_star, 6, theory);
        EXPECT_LE(rep.relative_gap, 1e-8) << spectrum.size() << " " << r << " " << N;
      }
    }
  }
}

// Six-step ratio on the cubic against 50-digit reference values.
TEST(EmpiricalRate, CubicTailMatchesHighPrecisionReference) {
  const Problem p = builtin("cubic_perturbed_quadratic", {{{"c", 0.1}}, {}, 0});
  const auto theory = theoretical_constant(Mat::Identity(1, 1), 1.0, 3);
  double previous_gap = std::numeric_limits<double>::infinity();
  for (const auto& ref : testing::kCubicTailRatio) {
    OcpParams params = OcpParams::scalar(1.0, 3, 1);
    params.grad_tol = 0.0;
    params.max_outer = 6;
    const Trajectory t = unified_solve(p.objective, params, scalar(ref.x0));
    const RateReport r = empirical_rate(t, scalar(0.0), 6, theory);
    EXPECT_NEAR(r.empirical_ratio, ref.ratio, 1e-9 * ref.ratio) << ref.x0;
    EXPECT_LT(r.relative_gap, previous_gap);
    previous_gap = r.relative_gap;
  }
  EXPECT_LE(previous_gap, 0.02);
}

TEST(PhiProbe, QuadraticHasZeroCurvatureOfMap) {
  for (double r : {0.1, 1.0}) {
    for (int N : {0, 3}) {
      const PhiProbe probe = phi_probe(quadratic1d(2.0, 0.5).objective, r, N, 0.5);
      EXPECT_NEAR(probe.phi_second_at_star, 0.0, 1e-4);
      EXPECT_EQ(probe.bound, 0.0);
      EXPECT_FALSE(probe.bound_holds_strictly());
      EXPECT_TRUE(probe.phi_prime_matches());
    }
  }
}

TEST(PhiProbe, CubicAgainstSymbolicReference) {
  const Problem p = builtin("cubic_perturbed_quadratic", {{{"c", 0.1}}, {}, 0});
  for (const auto& ref : testing::kCubicPhiSecond) {
    const PhiProbe probe = phi_probe(p.objective, ref.r, ref.N, 0.0);
    EXPECT_NEAR(probe.phi_prime_at_star, ref.phi_prime, 1e-8) << ref.r << " " << ref.N;
    EXPECT_NEAR(std::abs(probe.phi_second_at_star), std::abs(ref.phi_second), 1e-5)
        << ref.r << " " << ref.N;
    EXPECT_DOUBLE_EQ(probe.bound, 0.6);
    EXPECT_TRUE(probe.phi_prime_matches(1e-6));
    EXPECT_TRUE(probe.bound_holds_strictly()) << ref.r << " " << ref.N;
  }
}

TEST(PhiProbe, BoundHoldsForOtherCoefficients) {
  for (double c : {-0.3, 0.05, 0.5}) {
    const Problem p = builtin("cubic_perturbed_quadratic", {{{"c", c}}, {}, 0});
    for (double r : {0.1, 1.0, 10.0}) {
      for (int N : {0, 1, 3}) {
        const PhiProbe probe = phi_probe(p.objective, r, N, 0.0);
        EXPECT_TRUE(probe.bound_holds_strictly()) << c << " " << r << " " << N;
        EXPECT_TRUE(probe.phi_prime_matches());
      }
    }
  }
}

TEST(PhiProbe, Errors) {
  EXPECT_THROW(phi_probe(builtin("rosenbrock").objective, 1.0, 1, 1.0), DimensionMismatch);
  EXPECT_THROW(phi_probe(quadratic1d().objective, 0.0, 1, 0.0), BadParams);
  EXPECT_THROW(phi_probe(builtin("quartic_shift").objective, 1.0, 1, 0.0), NotPositiveDefinite);
}

std::vector<SolverSpec> baseline_solvers(Eigen::Index dim) {
  SolverSpec unified{"unified", SolverKind::Unified, OcpParams::scalar(1.0, 10, dim), {}};
  unified.ocp.grad_tol = 1e-8;
  SolverSpec gd{"gd", SolverKind::GradientDescent, OcpParams::scalar(1.0, 0, dim), {}};
  gd.gd.lr = 0.01;
  gd.gd.grad_tol = 1e-8;
  SolverSpec newton{"newton", SolverKind::Newton, OcpParams::scalar(1.0, 0, dim), {}};
  newton.ocp.grad_tol = 1e-8;
  return {unified, gd, newton};
}

TEST(Compare, UnifiedVersusGradientDescent) {
  const Problem p = quadratic_nd({1.0, 100.0}, 11);
  const ComparisonTable table = compare(baseline_solvers(2), p.objective, Vec::Constant(2, 1.0));
  ASSERT_EQ(table.rows.size(), 3u);
  EXPECT_EQ(table.rows[0].solver, "unified");
  EXPECT_EQ(table.rows[1].solver, "gd");
  const ComparisonRow* unified = table.find("unified");
  const ComparisonRow* gd = table.find("gd");
  ASSERT_TRUE(unified && gd);
  EXPECT_LE(unified->iterations, 5);
  EXPECT_GE(gd->iterations, 400);
  EXPECT_EQ(gd->termination, Termination::GradTol);
  EXPECT_EQ(unified->hessian_evals, unified->iterations);
  EXPECT_EQ(gd->hessian_evals, 0);
  EXPECT_GT(unified->linear_solves, 0);
  EXPECT_EQ(table.find("missing"), nullptr);
}

TEST(Compare, SingularStartFailsOnlyForNewton) {
  const Problem p = builtin("quartic_shift");
  std::vector<SolverSpec> specs = {
      {"newton", SolverKind::Newton, OcpParams::scalar(1.0, 0, 1), {}},
      {"unified", SolverKind::Unified, OcpParams::scalar(1.0, 2, 1), {}},
  };
  // f = x^3 + x is unbounded below; a short run stays inside the retry budget
  specs[1].ocp.max_outer = 5;
  const ComparisonTable table = compare(specs, p.objective, scalar(0.0));
  EXPECT_EQ(table.find("newton")->termination, Termination::StepFailure);
  EXPECT_EQ(table.find("unified")->termination, Termination::MaxOuter);
}

TEST(Compare, StartAtMinimizer) {
  const Problem p = quadratic_nd({1.0, 100.0}, 11);
  const ComparisonTable table = compare(baseline_solvers(2), p.objective, p.minimizer->x_star);
  for (const auto& row : table.rows) EXPECT_LE(row.iterations, 1) << row.solver;
}

}  // namespace
}  // namespace ocpopt
