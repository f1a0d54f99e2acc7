#include "ocpopt/numeric.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace ocpopt {

namespace {

std::string pivot_message(Eigen::Index index, double value) {
  std::ostringstream os;
  os << "matrix is not positive definite (pivot " << index << " = " << value << ")";
  return os.str();
}

void check_probe(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw NonFiniteEvaluation(std::string("non-finite function value in ") + what);
  }
}

double step_or_default(std::optional<double> h, double scale) {
  if (h) {
    if (!(*h > 0.0) || !std::isfinite(*h)) throw BadParams("finite-difference step must be > 0");
    return *h;
  }
  return default_fd_step(scale);
}

}  // namespace

NotPositiveDefinite::NotPositiveDefinite(Eigen::Index pivot_index, double pivot_value)
    : Error(pivot_message(pivot_index, pivot_value)),
      pivot_index_(pivot_index),
      pivot_value_(pivot_value) {}

StepMatrixNotPD::StepMatrixNotPD(Eigen::VectorXd x, Eigen::Index pivot_index, double pivot_value)
    : NotPositiveDefinite(pivot_index, pivot_value), x_(std::move(x)) {}

OracleNoConverge::OracleNoConverge(const std::string& what, double residual)
    : Error(what), residual_(residual) {}

bool all_finite(const Vec& v) { return v.allFinite(); }
bool all_finite(const Mat& m) { return m.allFinite(); }

bool is_symmetric(const Mat& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  const double asym = (a - a.transpose()).cwiseAbs().rowwise().sum().maxCoeff();
  return asym <= tol * norm;
}

void require_symmetric(const Mat& a, double tol) {
  if (a.rows() != a.cols()) throw DimensionMismatch("matrix is not square");
  if (!is_symmetric(a, tol)) throw NotSymmetric("matrix is not symmetric");
}

Cholesky::Cholesky(const Mat& a) {
  require_symmetric(a);
  if (!a.allFinite()) throw NonFiniteEvaluation("matrix has non-finite entries");
  const Eigen::Index n = a.rows();
  const double threshold = kPivotEpsilon * a.norm();
  l_ = Mat::Identity(n, n);
  d_ = Vec::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= l_(j, k) * l_(j, k) * d_[k];
    // A zero matrix has threshold 0, so `<=` still rejects it.
    if (!(pivot > threshold)) throw NotPositiveDefinite(j, pivot);
    d_[j] = pivot;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k) * d_[k];
      l_(i, j) = s / pivot;
    }
  }
}

Vec Cholesky::solve(const Vec& b) const {
  if (b.size() != size()) throw DimensionMismatch("right-hand side has wrong length");
  Vec y = l_.triangularView<Eigen::UnitLower>().solve(b);
  y.array() /= d_.array();
  return l_.transpose().triangularView<Eigen::UnitUpper>().solve(y);
}

Vec solve_spd(const Mat& a, const Vec& b) { return Cholesky(a).solve(b); }

double default_fd_step(double scale) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return base * std::max(1.0, std::abs(scale));
}

double default_fd_third_step(double scale) {
  static const double base = std::pow(std::numeric_limits<double>::epsilon(), 0.2);
  return base * std::max(1.0, std::abs(scale));
}

Vec fd_gradient(const ScalarField& f, const Vec& x, std::optional<double> h) {
  Vec g(x.size());
  Vec probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double hi = step_or_default(h, x[i]);
    probe[i] = x[i] + hi;
    const double fp = f(probe);
    probe[i] = x[i] - hi;
    const double fm = f(probe);
    probe[i] = x[i];
    check_probe(fp, "fd_gradient");
    check_probe(fm, "fd_gradient");
    g[i] = (fp - fm) / (2.0 * hi);
  }
  return g;
}

Mat fd_hessian(const ScalarField& f, const Vec& x, std::optional<double> h) {
  const Eigen::Index n = x.size();
  Mat hess(n, n);
  Vec probe = x;
  const double f0 = f(x);
  check_probe(f0, "fd_hessian");
  auto eval = [&](const Vec& p) {
    const double v = f(p);
    check_probe(v, "fd_hessian");
    return v;
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = step_or_default(h, x[i]);
    probe[i] = x[i] + hi;
    const double fp = eval(probe);
    probe[i] = x[i] - hi;
    const double fm = eval(probe);
    probe[i] = x[i];
    hess(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double hj = step_or_default(h, x[j]);
      double acc = 0.0;
      for (const auto& [si, sj] : {std::pair{1.0, 1.0}, {1.0, -1.0}, {-1.0, 1.0}, {-1.0, -1.0}}) {
        probe[i] = x[i] + si * hi;
        probe[j] = x[j] + sj * hj;
        acc += si * sj * eval(probe);
      }
      probe[i] = x[i];
      probe[j] = x[j];
      hess(i, j) = acc / (4.0 * hi * hj);
      hess(j, i) = hess(i, j);
    }
  }
  return 0.5 * (hess + hess.transpose());
}

double fd_third(const ScalarFunction& f, double x, std::optional<double> h) {
  double step;
  if (h) {
    step = step_or_default(h, x);
  } else {
    step = default_fd_third_step(x);
  }
  double v[4];
  const double offsets[4] = {2.0, 1.0, -1.0, -2.0};
  for (int i = 0; i < 4; ++i) {
    v[i] = f(x + offsets[i] * step);
    check_probe(v[i], "fd_third");
  }
  return (v[0] - 2.0 * v[1] + 2.0 * v[2] - v[3]) / (2.0 * step * step * step);
}

}  // namespace ocpopt
