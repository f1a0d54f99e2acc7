#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ocpopt/numeric.hpp"

namespace ocpopt {

/// Evaluation bundle for a twice (optionally three times) differentiable f.
///
/// Objectives are immutable once built and every callable must be safe to
/// invoke concurrently.
struct Objective {
  std::string name;
  Eigen::Index dim = 0;
  std::function<double(const Vec&)> eval;
  std::function<Vec(const Vec&)> grad;
  std::function<Mat(const Vec&)> hess;
  /// Scalar problems only: f'''(x).
  std::function<double(double)> third;

  bool has_third() const noexcept { return static_cast<bool>(third); }
};

struct KnownMinimizer {
  Vec x_star;
  Mat hess_at_star;
  bool is_unique = true;
};

struct Problem {
  Objective objective;
  std::optional<KnownMinimizer> minimizer;
  /// Customary starting point for the problem (e.g. (-1.2, 1) for Rosenbrock).
  Vec standard_start;
};

/// Named parameters for builtin(). Scalars and lists live in separate maps so
/// that spectra and centers can be given as vectors.
struct ProblemParams {
  std::map<std::string, double> scalars;
  std::map<std::string, std::vector<double>> lists;
  std::uint64_t seed = 0;
};

/// Names accepted by builtin(), in listing order.
const std::vector<std::string>& builtin_names();

/// One-line description of each builtin's parameters, for `ocpopt list`.
std::string builtin_usage(const std::string& name);

/// Builds one of the suite problems.
///
///   quadratic1d               f = (a/2)(x - b)^2                 a (default 1), b (default 0)
///   quadratic_nd              f = 1/2 (x - b)^T Q diag(s) Q^T (x - b)
///                             lists: spectrum (required, all > 0), b (default 0)
///   quartic_shift             f = a x^3 + b x                    a (default 1), b (default 1)
///   rosenbrock                sum 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2   n (default 2)
///   cubic_perturbed_quadratic f = x^2 / 2 + c x^3                c (default 0.1)
///
/// Throws UnknownProblem or BadParams.
Problem builtin(const std::string& name, const ProblemParams& params = {});

/// Deterministic orthogonal matrix built from n seeded Householder reflections.
Mat seeded_orthogonal(Eigen::Index n, std::uint64_t seed);

/// Uniform doubles in [0, 1) from a std::mt19937_64 stream. The mapping is
/// fixed here rather than left to <random> distributions so that seeded
/// problems are bit-identical across standard libraries.
class SeededUniform {
 public:
  explicit SeededUniform(std::uint64_t seed) : engine_(seed) {}

  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double next(double lo, double hi) { return lo + (hi - lo) * next(); }
  Vec vector(Eigen::Index n, double lo, double hi);

 private:
  std::mt19937_64 engine_;
};

/// Call counters filled by an instrumented objective.
struct EvalCounters {
  std::atomic<std::int64_t> evals{0};
  std::atomic<std::int64_t> grads{0};
  std::atomic<std::int64_t> hessians{0};

  void reset() {
    evals = 0;
    grads = 0;
    hessians = 0;
  }
};

/// Wraps `obj` so that every call bumps `counters`. The counters must outlive
/// the returned objective.
Objective instrument(const Objective& obj, EvalCounters& counters);

}  // namespace ocpopt
