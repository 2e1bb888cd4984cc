#pragma once

#include "progdec/core.hpp"
#include "progdec/operators.hpp"
#include "progdec/subspace.hpp"

namespace progdec {

/// A pair (x, y) in R^n x R^n, read as a point of graph S.
template <typename Scalar>
struct GraphPoint {
  Vector<Scalar> primal;
  Vector<Scalar> dual;
};

/// L_X(x, y) = (P_X x + P_Xperp y, P_X y + P_Xperp x). An involution.
template <typename Scalar>
GraphPoint<Scalar> spingarn_transform(const Subspace<Scalar>& s, const GraphPoint<Scalar>& p) {
  require_dim(p.primal.size(), s.ambient_dim(), "spingarn_transform primal");
  require_dim(p.dual.size(), s.ambient_dim(), "spingarn_transform dual");
  const Vector<Scalar> px = s.project(p.primal);
  const Vector<Scalar> py = s.project(p.dual);
  return {px + (p.dual - py), py + (p.primal - px)};
}

/// Matrix of the partial inverse of a linear map M with respect to X:
///   M^X = (P_Xperp + P_X M)(P_X + P_Xperp M)^{-1}.
template <typename Scalar>
Matrix<Scalar> partial_inverse_matrix(const Matrix<Scalar>& m, const Subspace<Scalar>& s) {
  const Eigen::Index n = s.ambient_dim();
  require_dim(m.rows(), n, "partial_inverse_matrix rows");
  require_dim(m.cols(), n, "partial_inverse_matrix cols");
  const Matrix<Scalar>& px = s.projector();
  const Matrix<Scalar>& pc = s.complement_projector();
  const Matrix<Scalar> right = px + pc * m;
  Eigen::PartialPivLU<Matrix<Scalar>> lu(right);
  if (is_numerically_singular(right, lu)) {
    throw NonInvertiblePartialInverse("partial inverse: P_X + P_Xperp M is singular");
  }
  const Matrix<Scalar> left = pc + px * m;
  // left * right^{-1} = (right^{-T} left^T)^T
  const Eigen::PartialPivLU<Matrix<Scalar>> lut(right.transpose());
  return lut.solve(left.transpose()).transpose();
}

/// Partial inverse of an affine operator S(x) = Mx - m, itself affine:
///   S^X(z) = K z - (P_X m - K P_Xperp m),  K = partial_inverse_matrix(M, X).
template <typename Scalar>
Operator<Scalar> partial_inverse(const Operator<Scalar>& op, const Subspace<Scalar>& s) {
  const auto parts = op.affine_parts();
  const Matrix<Scalar> k = partial_inverse_matrix(parts.matrix, s);
  const Vector<Scalar> shift = s.project(parts.offset) - k * s.project_complement(parts.offset);
  return Operator<Scalar>::affine(k, shift);
}

/// |P_Xperp x| + |P_X y| + |y - S(x)|; zero exactly on link_X S.
template <typename Scalar>
Scalar linkage_residual(const Operator<Scalar>& op, const Subspace<Scalar>& s,
                        const GraphPoint<Scalar>& p) {
  require_dim(p.primal.size(), s.ambient_dim(), "linkage_residual primal");
  require_dim(p.dual.size(), s.ambient_dim(), "linkage_residual dual");
  return s.project_complement(p.primal).norm() + s.project(p.dual).norm() +
         (p.dual - op(p.primal)).norm();
}

using GraphPointXd = GraphPoint<double>;

}  // namespace progdec
