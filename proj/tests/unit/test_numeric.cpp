#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "ocpopt/numeric.hpp"
#include "ocpopt/problems.hpp"

namespace ocpopt {
namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

TEST(SolveSpd, Identity) {
  const Vec x = solve_spd(Mat::Identity(2, 2), vec({3, 4}));
  EXPECT_DOUBLE_EQ(x[0], 3.0);
  EXPECT_DOUBLE_EQ(x[1], 4.0);
}

TEST(SolveSpd, DiagonalScaling) {
  Mat a(2, 2);
  a << 2, 0, 0, 2;
  const Vec x = solve_spd(a, vec({2, 4}));
  EXPECT_DOUBLE_EQ(x[0], 1.0);
  EXPECT_DOUBLE_EQ(x[1], 2.0);
}

TEST(SolveSpd, IndefiniteFailsWithPivotInfo) {
  // eigenvalues 3 and -1; second pivot is 1 - 2*2/1 = -3
  Mat a(2, 2);
  a << 1, 2, 2, 1;
  try {
    solve_spd(a, vec({1, 1}));
    FAIL() << "expected NotPositiveDefinite";
  } catch (const NotPositiveDefinite& e) {
    EXPECT_EQ(e.pivot_index(), 1);
    EXPECT_DOUBLE_EQ(e.pivot_value(), -3.0);
  }
}

TEST(SolveSpd, ZeroAndSingularMatricesFail) {
  EXPECT_THROW(solve_spd(Mat::Zero(1, 1), vec({1})), NotPositiveDefinite);
  Mat singular(2, 2);
  singular << 1, 1, 1, 1;
  EXPECT_THROW(solve_spd(singular, vec({1, 1})), NotPositiveDefinite);
}

TEST(SolveSpd, RejectsAsymmetricAndMismatchedInput) {
  Mat a(2, 2);
  a << 2, 1, 0, 2;
  EXPECT_THROW(solve_spd(a, vec({1, 1})), NotSymmetric);
  EXPECT_THROW(solve_spd(Mat::Identity(2, 2), vec({1})), DimensionMismatch);
  EXPECT_THROW(solve_spd(Mat::Identity(2, 3), vec({1, 1})), DimensionMismatch);
}

TEST(SolveSpd, ResidualOnRandomSpdMatrices) {
  SeededUniform rng(12345);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index n = 1 + trial % 12;
    Mat m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) m.row(i) = rng.vector(n, -1.0, 1.0).transpose();
    const Mat a = m.transpose() * m + Mat::Identity(n, n);
    const Vec b = rng.vector(n, -10.0, 10.0);
    const Vec x = solve_spd(a, b);
    const double bound = 1e-10 * (a.norm() * x.norm() + b.norm());
    ASSERT_LE((a * x - b).norm(), bound) << "trial " << trial;
  }
}

TEST(Symmetry, ToleranceIsRelative) {
  Mat a(2, 2);
  a << 1e6, 1.0, 1.0 + 1e-7, 1e6;
  EXPECT_TRUE(is_symmetric(a));
  a(1, 0) = 2.0;
  EXPECT_FALSE(is_symmetric(a));
}

TEST(FdGradient, Quadratic) {
  const ScalarField f = [](const Vec& x) { return x[0] * x[0]; };
  EXPECT_NEAR(fd_gradient(f, vec({3}), 1e-5)[0], 6.0, 1e-8);
}

TEST(FdGradient, Bilinear) {
  const ScalarField f = [](const Vec& x) { return x[0] * x[1]; };
  const Vec g = fd_gradient(f, vec({2, 5}), 1e-5);
  EXPECT_NEAR(g[0], 5.0, 1e-8);
  EXPECT_NEAR(g[1], 2.0, 1e-8);
}

TEST(FdGradient, SineWithinTaylorBound) {
  // truncation error h^2/6 ~ 1.7e-9
  const ScalarField f = [](const Vec& x) { return std::sin(x[0]); };
  EXPECT_NEAR(fd_gradient(f, vec({0}), 1e-4)[0], 1.0, 1e-8);
}

TEST(FdGradient, NonFiniteProbeThrows) {
  const ScalarField f = [](const Vec& x) { return x[0] > 0 ? std::log(-1.0) : 0.0; };
  EXPECT_THROW(fd_gradient(f, vec({0})), NonFiniteEvaluation);
  EXPECT_THROW(fd_gradient(f, vec({0}), -1.0), BadParams);
}

TEST(FdHessian, ScaledQuadratic) {
  const ScalarField f = [](const Vec& x) { return 3.5 * x[0] * x[0]; };
  EXPECT_NEAR(fd_hessian(f, vec({0.3}))(0, 0), 7.0, 1e-4);
}

TEST(FdHessian, ExactlySymmetric) {
  const ScalarField f = [](const Vec& x) {
    return std::exp(0.3 * x[0]) * std::sin(x[1]) + x[0] * x[1] * x[2] + x[2] * x[2] * x[0];
  };
  const Mat h = fd_hessian(f, vec({0.4, -1.3, 2.2}));
  EXPECT_TRUE((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);
  EXPECT_NEAR(h(0, 2), -1.3 + 2 * 2.2, 1e-4);
}

TEST(FdHessian, NonFiniteThrows) {
  const ScalarField f = [](const Vec& x) {
    return x[0] < 0 ? std::numeric_limits<double>::infinity() : x[0];
  };
  EXPECT_THROW(fd_hessian(f, vec({0})), NonFiniteEvaluation);
}

TEST(FdThird, Examples) {
  const ScalarFunction square = [](double x) { return x * x; };
  const ScalarFunction cube = [](double x) { return x * x * x; };
  EXPECT_NEAR(fd_third(square, 0.0), 0.0, 1e-4);
  for (double x : {-3.0, 0.0, 0.5, 2.0}) EXPECT_NEAR(fd_third(cube, x), 6.0, 1e-4) << x;
  const ScalarFunction bad = [](double x) { return x > 0 ? std::nan("") : x; };
  EXPECT_THROW(fd_third(bad, 0.0), NonFiniteEvaluation);
}

TEST(FdSteps, Defaults) {
  const double eps = std::numeric_limits<double>::epsilon();
  EXPECT_DOUBLE_EQ(default_fd_step(0.5), std::cbrt(eps));
  EXPECT_DOUBLE_EQ(default_fd_step(-4.0), 4.0 * std::cbrt(eps));
  EXPECT_NEAR(default_fd_third_step(1.0), std::pow(eps, 0.2), 1e-18);
}

// Analytic gradients of every suite problem agree with central differences.
TEST(FdGradient, AgreesWithSuiteGradients) {
  struct Case {
    std::string name;
    ProblemParams params;
  };
  std::vector<Case> cases = {
      {"quadratic1d", {{{"a", 2.0}, {"b", 3.0}}, {}, 0}},
      {"quadratic_nd", {{}, {{"spectrum", {1.0, 10.0, 100.0}}, {"b", {1.0, -2.0, 0.5}}}, 7}},
      {"quartic_shift", {}},
      {"rosenbrock", {{{"n", 4.0}}, {}, 0}},
      {"cubic_perturbed_quadratic", {{{"c", 0.3}}, {}, 0}},
  };
  SeededUniform rng(99);
  for (const auto& c : cases) {
    const Problem p = builtin(c.name, c.params);
    const auto& obj = p.objective;
    for (int k = 0; k < 20; ++k) {
      const Vec x = rng.vector(obj.dim, -2.0, 2.0);
      const Vec analytic = obj.grad(x);
      const Vec numeric = fd_gradient(obj.eval, x);
      const double tol = std::max(1e-6, 1e-6 * analytic.norm());
      EXPECT_LE((analytic - numeric).norm(), tol) << c.name << " point " << k;
    }
  }
}

}  // namespace
}  // namespace ocpopt
