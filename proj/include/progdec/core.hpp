#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace progdec {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;

/// [t]_- = -min(0, t)
template <typename Scalar>
constexpr Scalar negative_part(Scalar t) {
  return t < Scalar(0) ? -t : Scalar(0);
}

/// [t]_+ = max(0, t)
template <typename Scalar>
constexpr Scalar positive_part(Scalar t) {
  return t > Scalar(0) ? t : Scalar(0);
}

// Errors
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class TrivialSubspace : public Error {
 public:
  TrivialSubspace() : Error("trivial subspace requires explicit constructor") {}
};

class SingularResolvent : public Error {
 public:
  using Error::Error;
};

class NewtonDivergence : public Error {
 public:
  using Error::Error;
};

class NotDifferentiable : public Error {
 public:
  using Error::Error;
};

class NonInvertiblePartialInverse : public Error {
 public:
  using Error::Error;
};

class PreconditionOnX : public Error {
 public:
  using Error::Error;
};

class EmptyPlan : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class NotSPD : public Error {
 public:
  using Error::Error;
};

class NonCommuting : public Error {
 public:
  using Error::Error;
};

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw DimensionMismatch(std::string(what) + ": expected dimension " + std::to_string(want) +
                            ", got " + std::to_string(got));
  }
}

/// Smallest eigenvalue of the symmetric part of `m`.
template <typename Derived>
typename Derived::Scalar min_sym_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() == 0) return Scalar(0);
  Matrix<Scalar> sym = Scalar(0.5) * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Largest modulus among the (possibly complex) eigenvalues of a square matrix.
template <typename Derived>
typename Derived::Scalar spectral_radius(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Eigen::EigenSolver<Matrix<Scalar>> es(m.eval(), false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace progdec
