#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace ocpopt {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A symmetric factorization met a pivot at or below eps * ||A||_F.
class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(Eigen::Index pivot_index, double pivot_value);

  Eigen::Index pivot_index() const noexcept { return pivot_index_; }
  double pivot_value() const noexcept { return pivot_value_; }

 private:
  Eigen::Index pivot_index_;
  double pivot_value_;
};

class NotSymmetric : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// An objective (or finite-difference probe of one) produced NaN or Inf.
class NonFiniteEvaluation : public Error {
 public:
  using Error::Error;
};

class UnknownProblem : public Error {
 public:
  using Error::Error;
};

class BadParams : public Error {
 public:
  using Error::Error;
};

/// The step matrix R + H(x) could not be factored.
class StepMatrixNotPD : public NotPositiveDefinite {
 public:
  StepMatrixNotPD(Eigen::VectorXd x, Eigen::Index pivot_index, double pivot_value);

  const Eigen::VectorXd& x() const noexcept { return x_; }

 private:
  Eigen::VectorXd x_;
};

class OracleNoConverge : public Error {
 public:
  OracleNoConverge(const std::string& what, double residual);

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

}  // namespace ocpopt
