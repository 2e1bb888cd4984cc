#pragma once

#include "progdec/core.hpp"

#include <vector>

namespace progdec {

/// Closed linear subspace X of R^n, held through an orthonormal basis and the
/// dense orthogonal projectors onto X and its complement. Immutable.
template <typename Scalar>
class Subspace {
 public:
  using VectorType = Vector<Scalar>;
  using MatrixType = Matrix<Scalar>;

  /// Columns whose residual norm after orthogonalization falls below this
  /// (relative to the largest input column) are dropped as dependent.
  static constexpr double kDropTolerance = 1e-10;

  /// Orthonormalizes the columns of `spanning` (n x k). Dependent columns are
  /// dropped; an all-zero span throws TrivialSubspace.
  static Subspace from_columns(const MatrixType& spanning) {
    const Eigen::Index n = spanning.rows();
    if (n <= 0) throw InvalidArgument("subspace: ambient dimension must be positive");
    if (spanning.cols() == 0) throw TrivialSubspace();

    const Scalar scale = std::max(Scalar(1), spanning.colwise().norm().maxCoeff());
    const Scalar drop = Scalar(kDropTolerance) * scale;

    MatrixType basis(n, std::min<Eigen::Index>(n, spanning.cols()));
    Eigen::Index d = 0;
    for (Eigen::Index j = 0; j < spanning.cols() && d < n; ++j) {
      VectorType v = spanning.col(j);
      // modified Gram-Schmidt, two passes
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index i = 0; i < d; ++i) v -= basis.col(i).dot(v) * basis.col(i);
      }
      const Scalar norm = v.norm();
      if (norm <= drop) continue;
      basis.col(d++) = v / norm;
    }
    if (d == 0) throw TrivialSubspace();
    return Subspace(basis.leftCols(d));
  }

  static Subspace from_basis(const std::vector<VectorType>& vectors) {
    if (vectors.empty()) throw InvalidArgument("subspace: at least one spanning vector required");
    const Eigen::Index n = vectors.front().size();
    MatrixType cols(n, static_cast<Eigen::Index>(vectors.size()));
    for (std::size_t j = 0; j < vectors.size(); ++j) {
      require_dim(vectors[j].size(), n, "subspace::from_basis");
      cols.col(static_cast<Eigen::Index>(j)) = vectors[j];
    }
    return from_columns(cols);
  }

  static Subspace full(Eigen::Index n) {
    if (n <= 0) throw InvalidArgument("subspace: ambient dimension must be positive");
    return Subspace(MatrixType::Identity(n, n));
  }

  /// The zero subspace {0}; its complement is all of R^n.
  static Subspace trivial(Eigen::Index n) {
    if (n <= 0) throw InvalidArgument("subspace: ambient dimension must be positive");
    return Subspace(MatrixType(n, 0));
  }

  Eigen::Index ambient_dim() const { return basis_.rows(); }
  Eigen::Index dim() const { return basis_.cols(); }

  const MatrixType& basis() const { return basis_; }
  const MatrixType& projector() const { return projector_; }
  const MatrixType& complement_projector() const { return complement_projector_; }

  /// Orthonormal basis of the orthogonal complement (n x (n - d)).
  MatrixType complement_basis() const {
    const Eigen::Index n = ambient_dim();
    if (dim() == 0) return MatrixType::Identity(n, n);
    Eigen::HouseholderQR<MatrixType> qr(basis_);
    MatrixType q = qr.householderQ() * MatrixType::Identity(n, n);
    return q.rightCols(n - dim());
  }

  Subspace complement() const { return Subspace(complement_basis()); }

  template <typename Derived>
  VectorType project(const Eigen::MatrixBase<Derived>& v) const {
    require_dim(v.size(), ambient_dim(), "subspace::project");
    return basis_ * (basis_.transpose() * v);
  }

  template <typename Derived>
  VectorType project_complement(const Eigen::MatrixBase<Derived>& v) const {
    require_dim(v.size(), ambient_dim(), "subspace::project_complement");
    return v - project(v);
  }

  template <typename Derived>
  bool contains(const Eigen::MatrixBase<Derived>& v, Scalar tol) const {
    return project_complement(v).norm() <= tol;
  }

 private:
  explicit Subspace(MatrixType basis) : basis_(std::move(basis)) {
    const Eigen::Index n = basis_.rows();
    projector_ = basis_ * basis_.transpose();
    complement_projector_ = MatrixType::Identity(n, n) - projector_;
  }

  MatrixType basis_;
  MatrixType projector_;
  MatrixType complement_projector_;
};

/// X = {(x_1, ..., x_N) : x_1 = ... = x_N} in R^{N n}.
template <typename Scalar = double>
Subspace<Scalar> consensus_subspace(Eigen::Index blocks, Eigen::Index block_dim) {
  if (blocks < 1 || block_dim < 1) {
    throw InvalidArgument("consensus_subspace: blocks and block_dim must be positive");
  }
  Matrix<Scalar> stacked(blocks * block_dim, block_dim);
  for (Eigen::Index i = 0; i < blocks; ++i) {
    stacked.block(i * block_dim, 0, block_dim, block_dim).setIdentity();
  }
  return Subspace<Scalar>::from_columns(stacked);
}

using SubspaceXd = Subspace<double>;

}  // namespace progdec
