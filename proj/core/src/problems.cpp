#include "ocpopt/problems.hpp"

#include <algorithm>
#include <cmath>

namespace ocpopt {

namespace {

double scalar_param(const ProblemParams& p, const std::string& key, double fallback) {
  const auto it = p.scalars.find(key);
  if (it == p.scalars.end()) return fallback;
  if (!std::isfinite(it->second)) throw BadParams("parameter '" + key + "' is not finite");
  return it->second;
}

void reject_unknown_keys(const ProblemParams& p, const std::string& problem,
                         std::initializer_list<const char*> scalars,
                         std::initializer_list<const char*> lists = {}) {
  auto allowed = [](const std::string& key, std::initializer_list<const char*> keys) {
    return std::any_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; });
  };
  for (const auto& [key, value] : p.scalars) {
    if (!allowed(key, scalars)) throw BadParams(problem + ": unknown parameter '" + key + "'");
  }
  for (const auto& [key, value] : p.lists) {
    if (!allowed(key, lists)) throw BadParams(problem + ": unknown list parameter '" + key + "'");
  }
}

Vec scalar_vec(double v) { return Vec::Constant(1, v); }
Mat scalar_mat(double v) { return Mat::Constant(1, 1, v); }

Problem make_quadratic1d(const ProblemParams& p) {
  reject_unknown_keys(p, "quadratic1d", {"a", "b"});
  const double a = scalar_param(p, "a", 1.0);
  const double b = scalar_param(p, "b", 0.0);
  if (!(a > 0.0)) throw BadParams("quadratic1d: coefficient a must be > 0");

  Problem prob;
  auto& obj = prob.objective;
  obj.name = "quadratic1d";
  obj.dim = 1;
  obj.eval = [a, b](const Vec& x) { return 0.5 * a * (x[0] - b) * (x[0] - b); };
  obj.grad = [a, b](const Vec& x) { return scalar_vec(a * (x[0] - b)); };
  obj.hess = [a](const Vec&) { return scalar_mat(a); };
  obj.third = [](double) { return 0.0; };
  prob.minimizer = KnownMinimizer{scalar_vec(b), scalar_mat(a), true};
  prob.standard_start = scalar_vec(b + 1.0);
  return prob;
}

Problem make_quadratic_nd(const ProblemParams& p) {
  reject_unknown_keys(p, "quadratic_nd", {}, {"spectrum", "b"});
  const auto spec_it = p.lists.find("spectrum");
  if (spec_it == p.lists.end() || spec_it->second.empty()) {
    throw BadParams("quadratic_nd: non-empty 'spectrum' list required");
  }
  const auto& spectrum = spec_it->second;
  const auto n = static_cast<Eigen::Index>(spectrum.size());
  for (double s : spectrum) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw BadParams("quadratic_nd: spectrum entries must be finite and > 0");
    }
  }
  Vec center = Vec::Zero(n);
  if (const auto it = p.lists.find("b"); it != p.lists.end()) {
    if (static_cast<Eigen::Index>(it->second.size()) != n) {
      throw BadParams("quadratic_nd: 'b' must have the same length as 'spectrum'");
    }
    center = Eigen::Map<const Vec>(it->second.data(), n);
    if (!center.allFinite()) throw BadParams("quadratic_nd: 'b' must be finite");
  }

  const Mat q = seeded_orthogonal(n, p.seed);
  const Vec s = Eigen::Map<const Vec>(spectrum.data(), n);
  Mat h = q * s.asDiagonal() * q.transpose();
  h = 0.5 * (h + h.transpose());

  Problem prob;
  auto& obj = prob.objective;
  obj.name = "quadratic_nd";
  obj.dim = n;
  obj.eval = [h, center](const Vec& x) {
    const Vec d = x - center;
    return 0.5 * d.dot(h * d);
  };
  obj.grad = [h, center](const Vec& x) -> Vec { return h * (x - center); };
  obj.hess = [h](const Vec&) -> Mat { return h; };
  if (n == 1) obj.third = [](double) { return 0.0; };
  prob.minimizer = KnownMinimizer{center, h, true};
  prob.standard_start = center + Vec::Ones(n);
  return prob;
}

Problem make_quartic_shift(const ProblemParams& p) {
  reject_unknown_keys(p, "quartic_shift", {"a", "b"});
  const double a = scalar_param(p, "a", 1.0);
  const double b = scalar_param(p, "b", 1.0);

  Problem prob;
  auto& obj = prob.objective;
  obj.name = "quartic_shift";
  obj.dim = 1;
  obj.eval = [a, b](const Vec& x) { return a * x[0] * x[0] * x[0] + b * x[0]; };
  obj.grad = [a, b](const Vec& x) { return scalar_vec(3.0 * a * x[0] * x[0] + b); };
  obj.hess = [a](const Vec& x) { return scalar_mat(6.0 * a * x[0]); };
  obj.third = [a](double) { return 6.0 * a; };
  // Stationary points exist only for a*b < 0, and never a global minimum.
  if (a != 0.0 && a * b < 0.0) {
    const double xs = std::sqrt(-b / (3.0 * a));
    const double root = a > 0.0 ? xs : -xs;
    prob.minimizer = KnownMinimizer{scalar_vec(root), scalar_mat(6.0 * a * root), false};
  }
  prob.standard_start = scalar_vec(0.0);
  return prob;
}

Problem make_rosenbrock(const ProblemParams& p) {
  reject_unknown_keys(p, "rosenbrock", {"n"});
  const double nd = scalar_param(p, "n", 2.0);
  if (nd < 2.0 || nd != std::floor(nd) || nd > 1e4) {
    throw BadParams("rosenbrock: n must be an integer >= 2");
  }
  const auto n = static_cast<Eigen::Index>(nd);

  Problem prob;
  auto& obj = prob.objective;
  obj.name = "rosenbrock";
  obj.dim = n;
  obj.eval = [n](const Vec& x) {
    double f = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const double t = x[i + 1] - x[i] * x[i];
      const double u = 1.0 - x[i];
      f += 100.0 * t * t + u * u;
    }
    return f;
  };
  obj.grad = [n](const Vec& x) {
    Vec g = Vec::Zero(n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const double t = x[i + 1] - x[i] * x[i];
      g[i] += -400.0 * x[i] * t - 2.0 * (1.0 - x[i]);
      g[i + 1] += 200.0 * t;
    }
    return g;
  };
  obj.hess = [n](const Vec& x) {
    Mat h = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      h(i, i) += 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
      h(i, i + 1) += -400.0 * x[i];
      h(i + 1, i) += -400.0 * x[i];
      h(i + 1, i + 1) += 200.0;
    }
    return h;
  };
  const Vec ones = Vec::Ones(n);
  prob.minimizer = KnownMinimizer{ones, obj.hess(ones), true};
  prob.standard_start = Vec(n);
  for (Eigen::Index i = 0; i < n; ++i) prob.standard_start[i] = (i % 2 == 0) ? -1.2 : 1.0;
  return prob;
}

Problem make_cubic_perturbed_quadratic(const ProblemParams& p) {
  reject_unknown_keys(p, "cubic_perturbed_quadratic", {"c"});
  const double c = scalar_param(p, "c", 0.1);

  Problem prob;
  auto& obj = prob.objective;
  obj.name = "cubic_perturbed_quadratic";
  obj.dim = 1;
  obj.eval = [c](const Vec& x) { return 0.5 * x[0] * x[0] + c * x[0] * x[0] * x[0]; };
  obj.grad = [c](const Vec& x) { return scalar_vec(x[0] + 3.0 * c * x[0] * x[0]); };
  obj.hess = [c](const Vec& x) { return scalar_mat(1.0 + 6.0 * c * x[0]); };
  obj.third = [c](double) { return 6.0 * c; };
  // x = 0 is a local minimizer; for c != 0 the function is unbounded below.
  prob.minimizer = KnownMinimizer{scalar_vec(0.0), scalar_mat(1.0), c == 0.0};
  prob.standard_start = scalar_vec(0.1);
  return prob;
}

}  // namespace

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {
      "quadratic1d", "quadratic_nd", "quartic_shift", "rosenbrock", "cubic_perturbed_quadratic"};
  return names;
}

std::string builtin_usage(const std::string& name) {
  if (name == "quadratic1d") return "f = (a/2)(x-b)^2; a > 0 (default 1), b (default 0)";
  if (name == "quadratic_nd") {
    return "f = 1/2 (x-b)' Q diag(spectrum) Q' (x-b); spectrum (list, > 0), b (list), seed";
  }
  if (name == "quartic_shift") return "f = a x^3 + b x; a (default 1), b (default 1)";
  if (name == "rosenbrock") return "f = sum 100(x[i+1]-x[i]^2)^2 + (1-x[i])^2; n >= 2 (default 2)";
  if (name == "cubic_perturbed_quadratic") return "f = x^2/2 + c x^3; c (default 0.1)";
  throw UnknownProblem("unknown problem '" + name + "'");
}

Problem builtin(const std::string& name, const ProblemParams& params) {
  if (name == "quadratic1d") return make_quadratic1d(params);
  if (name == "quadratic_nd") return make_quadratic_nd(params);
  if (name == "quartic_shift") return make_quartic_shift(params);
  if (name == "rosenbrock") return make_rosenbrock(params);
  if (name == "cubic_perturbed_quadratic") return make_cubic_perturbed_quadratic(params);
  throw UnknownProblem("unknown problem '" + name + "'");
}

Vec SeededUniform::vector(Eigen::Index n, double lo, double hi) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = next(lo, hi);
  return v;
}

Mat seeded_orthogonal(Eigen::Index n, std::uint64_t seed) {
  SeededUniform rng(seed);
  Mat q = Mat::Identity(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Vec v = rng.vector(n, -1.0, 1.0);
    const double norm = v.norm();
    if (norm < 1e-8) continue;
    v /= norm;
    // q <- q (I - 2 v v^T)
    q -= 2.0 * (q * v) * v.transpose();
  }
  return q;
}

Objective instrument(const Objective& obj, EvalCounters& counters) {
  Objective out = obj;
  out.eval = [f = obj.eval, &counters](const Vec& x) {
    counters.evals.fetch_add(1, std::memory_order_relaxed);
    return f(x);
  };
  out.grad = [g = obj.grad, &counters](const Vec& x) {
    counters.grads.fetch_add(1, std::memory_order_relaxed);
    return g(x);
  };
  out.hess = [h = obj.hess, &counters](const Vec& x) {
    counters.hessians.fetch_add(1, std::memory_order_relaxed);
    return h(x);
  };
  return out;
}

}  // namespace ocpopt
