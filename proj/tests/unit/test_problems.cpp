#include <cstring>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "ocpopt/problems.hpp"

namespace ocpopt {
namespace {

Vec scalar(double v) { return Vec::Constant(1, v); }

ProblemParams spectrum(std::vector<double> s, std::uint64_t seed = 0) {
  ProblemParams p;
  p.lists["spectrum"] = std::move(s);
  p.seed = seed;
  return p;
}

TEST(Builtin, Quadratic1d) {
  const Problem p = builtin("quadratic1d", {{{"a", 2.0}, {"b", 3.0}}, {}, 0});
  ASSERT_TRUE(p.minimizer);
  EXPECT_DOUBLE_EQ(p.minimizer->x_star[0], 3.0);
  EXPECT_DOUBLE_EQ(p.minimizer->hess_at_star(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(p.objective.eval(scalar(5.0)), 4.0);
  EXPECT_DOUBLE_EQ(p.objective.grad(scalar(5.0))[0], 4.0);
  EXPECT_DOUBLE_EQ(p.objective.third(1.0), 0.0);
}

TEST(Builtin, QuarticShiftSingularPoint) {
  const Problem p = builtin("quartic_shift");
  EXPECT_DOUBLE_EQ(p.objective.grad(scalar(0.0))[0], 1.0);
  EXPECT_DOUBLE_EQ(p.objective.hess(scalar(0.0))(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(p.objective.third(0.0), 6.0);
  EXPECT_FALSE(p.minimizer);
  EXPECT_DOUBLE_EQ(p.standard_start[0], 0.0);
}

TEST(Builtin, QuarticShiftLocalMinimizer) {
  const Problem p = builtin("quartic_shift", {{{"a", 1.0}, {"b", -3.0}}, {}, 0});
  ASSERT_TRUE(p.minimizer);
  EXPECT_DOUBLE_EQ(p.minimizer->x_star[0], 1.0);
  EXPECT_FALSE(p.minimizer->is_unique);
}

TEST(Builtin, Rosenbrock) {
  const Problem p = builtin("rosenbrock", {{{"n", 2.0}}, {}, 0});
  ASSERT_TRUE(p.minimizer);
  EXPECT_DOUBLE_EQ(p.objective.eval(Vec::Ones(2)), 0.0);
  EXPECT_DOUBLE_EQ(p.standard_start[0], -1.2);
  EXPECT_DOUBLE_EQ(p.standard_start[1], 1.0);
  EXPECT_DOUBLE_EQ(p.objective.eval(p.standard_start), 24.2);
}

TEST(Builtin, CubicPerturbedQuadratic) {
  const Problem p = builtin("cubic_perturbed_quadratic", {{{"c", 0.1}}, {}, 0});
  EXPECT_DOUBLE_EQ(p.objective.third(0.0), 0.6);
  EXPECT_DOUBLE_EQ(p.minimizer->hess_at_star(0, 0), 1.0);
}

TEST(Builtin, Errors) {
  EXPECT_THROW(builtin("himmelblau"), UnknownProblem);
  EXPECT_THROW(builtin("quadratic1d", {{{"a", 0.0}}, {}, 0}), BadParams);
  EXPECT_THROW(builtin("quadratic1d", {{{"a", -1.0}}, {}, 0}), BadParams);
  EXPECT_THROW(builtin("quadratic1d", {{{"alpha", 1.0}}, {}, 0}), BadParams);
  EXPECT_THROW(builtin("quadratic_nd"), BadParams);
  EXPECT_THROW(builtin("quadratic_nd", spectrum({1.0, 0.0})), BadParams);
  ProblemParams bad_center = spectrum({1.0, 2.0});
  bad_center.lists["b"] = {1.0};
  EXPECT_THROW(builtin("quadratic_nd", bad_center), BadParams);
  EXPECT_THROW(builtin("rosenbrock", {{{"n", 1.0}}, {}, 0}), BadParams);
  EXPECT_THROW(builtin("rosenbrock", {{{"n", 2.5}}, {}, 0}), BadParams);
  EXPECT_THROW(builtin_usage("nope"), UnknownProblem);
}

TEST(Builtin, QuadraticNdSpectrumAndOrthogonality) {
  const Problem p = builtin("quadratic_nd", spectrum({1.0, 4.0, 100.0}, 3));
  const Mat q = seeded_orthogonal(3, 3);
  EXPECT_LE((q.transpose() * q - Mat::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-14);
  const Eigen::SelfAdjointEigenSolver<Mat> eig(p.minimizer->hess_at_star);
  EXPECT_NEAR(eig.eigenvalues()[0], 1.0, 1e-12);
  EXPECT_NEAR(eig.eigenvalues()[1], 4.0, 1e-12);
  EXPECT_NEAR(eig.eigenvalues()[2], 100.0, 1e-12);
}

TEST(Builtin, SeededProblemsAreBitReproducible) {
  const Mat h1 = builtin("quadratic_nd", spectrum({1.0, 2.0, 3.0, 4.0}, 42)).minimizer->hess_at_star;
  const Mat h2 = builtin("quadratic_nd", spectrum({1.0, 2.0, 3.0, 4.0}, 42)).minimizer->hess_at_star;
  const Mat h3 = builtin("quadratic_nd", spectrum({1.0, 2.0, 3.0, 4.0}, 43)).minimizer->hess_at_star;
  EXPECT_EQ(std::memcmp(h1.data(), h2.data(), sizeof(double) * 16), 0);
  EXPECT_NE(std::memcmp(h1.data(), h3.data(), sizeof(double) * 16), 0);
}

TEST(SeededUniform, FixedStream) {
  // std::mt19937_64 is fully specified, so the first draw is portable.
  SeededUniform a(5489);
  const double first = a.next();
  EXPECT_DOUBLE_EQ(first, static_cast<double>(14514284786278117030ULL >> 11) * 0x1.0p-53);
  for (int i = 0; i < 1000; ++i) {
    const double v = a.next(-1.0, 1.0);
    ASSERT_GE(v, -1.0);
    ASSERT_LT(v, 1.0);
  }
}

// Every builtin with a known minimizer has a vanishing gradient and a PSD
// Hessian there.
TEST(Builtin, KnownMinimizersAreStationary) {
  std::vector<std::pair<std::string, ProblemParams>> cases = {
      {"quadratic1d", {{{"a", 3.0}, {"b", -1.5}}, {}, 0}},
      {"quadratic_nd", [] {
         ProblemParams p = spectrum({0.5, 2.0, 30.0}, 11);
         p.lists["b"] = {0.25, -1.0, 3.0};
         return p;
       }()},
      {"quartic_shift", {{{"a", 2.0}, {"b", -6.0}}, {}, 0}},
      {"rosenbrock", {{{"n", 5.0}}, {}, 0}},
      {"cubic_perturbed_quadratic", {{{"c", -0.2}}, {}, 0}},
  };
  for (const auto& [name, params] : cases) {
    const Problem p = builtin(name, params);
    ASSERT_TRUE(p.minimizer) << name;
    EXPECT_LE(p.objective.grad(p.minimizer->x_star).norm(), 1e-12) << name;
    const Mat h = p.minimizer->hess_at_star;
    EXPECT_NO_THROW(Cholesky{h + 1e-14 * Mat::Identity(h.rows(), h.cols())}) << name;
    EXPECT_TRUE(is_symmetric(h)) << name;
  }
}

TEST(Builtin, HessiansMatchFiniteDifferences) {
  SeededUniform rng(3);
  for (const auto& name : builtin_names()) {
    ProblemParams params;
    if (name == "quadratic_nd") params = spectrum({1.0, 5.0});
    const Problem p = builtin(name, params);
    for (int k = 0; k < 5; ++k) {
      const Vec x = rng.vector(p.objective.dim, -1.5, 1.5);
      const Mat analytic = p.objective.hess(x);
      const Mat numeric = fd_hessian(p.objective.eval, x);
      EXPECT_LE((analytic - numeric).cwiseAbs().maxCoeff(), 1e-3 * std::max(1.0, analytic.norm()))
          << name;
      EXPECT_TRUE(is_symmetric(analytic));
    }
  }
}

TEST(Instrument, CountsEachCallKind) {
  const Problem p = builtin("rosenbrock");
  EvalCounters counters;
  const Objective counted = instrument(p.objective, counters);
  const Vec x = p.standard_start;
  counted.eval(x);
  counted.grad(x);
  counted.grad(x);
  counted.hess(x);
  EXPECT_EQ(counters.evals.load(), 1);
  EXPECT_EQ(counters.grads.load(), 2);
  EXPECT_EQ(counters.hessians.load(), 1);
  EXPECT_DOUBLE_EQ(counted.eval(x), p.objective.eval(x));
}

}  // namespace
}  // namespace ocpopt
