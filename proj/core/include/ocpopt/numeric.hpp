#pragma once

#include <functional>
#include <optional>

#include <Eigen/Core>

#include "ocpopt/errors.hpp"

namespace ocpopt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// f : R^n -> R
using ScalarField = std::function<double(const Vec&)>;
/// f : R -> R
using ScalarFunction = std::function<double(double)>;

/// Relative pivot threshold used by every SPD factorization in the library.
inline constexpr double kPivotEpsilon = 1e-12;

bool all_finite(const Vec& v);
bool all_finite(const Mat& m);

/// ||A - A^T||_inf <= tol * ||A||_inf, with the infinity norm taken as max row sum.
bool is_symmetric(const Mat& a, double tol = 1e-12);

/// Throws NotSymmetric when `a` fails is_symmetric, DimensionMismatch when not square.
void require_symmetric(const Mat& a, double tol = 1e-12);

/// Dense square-root-free Cholesky factorization A = L D L^T, L unit lower.
///
/// Construction fails with NotPositiveDefinite as soon as a pivot D(j)
/// drops to kPivotEpsilon * ||A||_F or below.
/// The factor is reusable, so repeated solves against the same step matrix
/// cost one factorization.
class Cholesky {
 public:
  explicit Cholesky(const Mat& a);

  Eigen::Index size() const noexcept { return l_.rows(); }
  const Mat& unit_lower() const noexcept { return l_; }
  const Vec& pivots() const noexcept { return d_; }

  Vec solve(const Vec& b) const;

 private:
  Mat l_;
  Vec d_;
};

/// Solves A x = b for symmetric positive definite A.
Vec solve_spd(const Mat& a, const Vec& b);

/// Default step for first and second differences: eps^(1/3) * max(1, |x|).
double default_fd_step(double scale);
/// Default step for the third-derivative stencil: eps^(1/5) * max(1, |x|).
double default_fd_third_step(double scale);

/// Central-difference gradient. When `h` is not given each coordinate uses
/// default_fd_step(x_i).
Vec fd_gradient(const ScalarField& f, const Vec& x, std::optional<double> h = std::nullopt);

/// Central-difference Hessian, returned as (H + H^T) / 2.
Mat fd_hessian(const ScalarField& f, const Vec& x, std::optional<double> h = std::nullopt);

/// Five-point central stencil for f'''(x).
double fd_third(const ScalarFunction& f, double x, std::optional<double> h = std::nullopt);

}  // namespace ocpopt
