#include <benchmark/benchmark.h>

#include "ocpopt/ocpopt.hpp"

using namespace ocpopt;

namespace {

Problem spectrum_problem(int n) {
  ProblemParams p;
  for (int i = 0; i < n; ++i) p.lists["spectrum"].push_back(1.0 + 99.0 * i / std::max(1, n - 1));
  p.seed = 1;
  return builtin("quadratic_nd", p);
}

void BM_GbarDepth(benchmark::State& state) {
  const Problem p = spectrum_problem(16);
  const Mat R = Mat::Identity(16, 16);
  const Vec x = Vec::Ones(16);
  const int depth = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(gbar(p.objective, x, R, depth));
}
BENCHMARK(BM_GbarDepth)->RangeMultiplier(2)->Range(1, 64);

void BM_SolveSpd(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  SeededUniform rng(3);
  Mat m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m.row(i) = rng.vector(n, -1.0, 1.0).transpose();
  const Mat a = m * m.transpose() + Mat::Identity(n, n);
  const Vec b = rng.vector(n, -1.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(solve_spd(a, b));
}
BENCHMARK(BM_SolveSpd)->RangeMultiplier(4)->Range(4, 256);

void BM_RosenbrockSolver(benchmark::State& state) {
  const Problem p = builtin("rosenbrock", {{{"n", 10.0}}, {}, 0});
  SolverSpec spec;
  spec.kind = static_cast<SolverKind>(state.range(0));
  spec.ocp = OcpParams::scalar(1.0, 3, 10);
  spec.ocp.grad_tol = 1e-8;
  spec.gd.lr = 1e-3;
  spec.gd.grad_tol = 1e-8;
  spec.gd.max_outer = 5000;
  std::size_t steps = 0;
  for (auto _ : state) {
    const Trajectory t = run_solver(spec, p.objective, p.standard_start);
    steps = t.steps();
    benchmark::DoNotOptimize(t.final_grad_norm);
  }
  state.SetLabel(std::string(to_string(spec.kind)));
  state.counters["steps"] = static_cast<double>(steps);
}
BENCHMARK(BM_RosenbrockSolver)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
