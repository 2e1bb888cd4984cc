#pragma once

#include "progdec/core.hpp"
#include "progdec/subspace.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <type_traits>
#include <variant>

namespace progdec {

/// Single-valued mapping S: R^n -> R^n. Multivalued operators (and hence
/// set-valued resolvents) are not represented.
template <typename Scalar>
class Operator {
 public:
  using VectorType = Vector<Scalar>;
  using MatrixType = Matrix<Scalar>;
  using ScalarFn = std::function<Scalar(const VectorType&)>;
  using VectorFn = std::function<VectorType(const VectorType&)>;
  using MatrixFn = std::function<MatrixType(const VectorType&)>;

  /// S(x) = M x - m
  struct Affine {
    MatrixType matrix;
    VectorType offset;
  };

  /// S = grad f. The Hessian callback is optional; without it the Jacobian
  /// falls back to central finite differences of the gradient.
  struct SmoothGradient {
    ScalarFn value;
    VectorFn gradient;
    MatrixFn hessian;
  };

  /// Generic continuous mapping F, with an optional Jacobian callback. Without
  /// one, the mapping is treated as non-differentiable.
  struct Mapping {
    VectorFn map;
    MatrixFn jacobian;
  };

  /// S(x) = base(x) + shift * x; typically shift = c * P for a projector P.
  struct Shifted {
    std::shared_ptr<const Operator> base;
    MatrixType shift;
  };

  using Kind = std::variant<Affine, SmoothGradient, Mapping, Shifted>;

  static Operator affine(MatrixType matrix, VectorType offset) {
    if (matrix.rows() != matrix.cols()) throw InvalidArgument("affine operator: matrix must be square");
    require_dim(offset.size(), matrix.rows(), "affine operator offset");
    const Eigen::Index n = matrix.rows();
    return Operator(Affine{std::move(matrix), std::move(offset)}, n);
  }

  static Operator linear(MatrixType matrix) {
    const Eigen::Index n = matrix.rows();
    return affine(std::move(matrix), VectorType::Zero(n));
  }

  static Operator smooth_gradient(Eigen::Index n, ScalarFn value, VectorFn gradient,
                                  MatrixFn hessian = {}) {
    if (n <= 0) throw InvalidArgument("smooth gradient operator: dimension must be positive");
    if (!gradient) throw InvalidArgument("smooth gradient operator: gradient callback required");
    return Operator(SmoothGradient{std::move(value), std::move(gradient), std::move(hessian)}, n);
  }

  static Operator mapping(Eigen::Index n, VectorFn map, MatrixFn jacobian = {}) {
    if (n <= 0) throw InvalidArgument("mapping operator: dimension must be positive");
    if (!map) throw InvalidArgument("mapping operator: map callback required");
    return Operator(Mapping{std::move(map), std::move(jacobian)}, n);
  }

  static Operator shifted(Operator base, MatrixType shift) {
    const Eigen::Index n = base.dim();
    require_dim(shift.rows(), n, "shifted operator");
    require_dim(shift.cols(), n, "shifted operator");
    return Operator(Shifted{std::make_shared<const Operator>(std::move(base)), std::move(shift)}, n);
  }

  /// base + scale * P_{X^perp}; scale = e >= 0 is the elicitation level.
  static Operator shifted_complement(Operator base, const Subspace<Scalar>& s, Scalar scale) {
    return shifted(std::move(base), scale * s.complement_projector());
  }

  Eigen::Index dim() const { return dim_; }
  const Kind& kind() const { return kind_; }

  bool is_affine() const {
    if (std::holds_alternative<Affine>(kind_)) return true;
    if (const auto* sh = std::get_if<Shifted>(&kind_)) return sh->base->is_affine();
    return false;
  }

  /// Flattened (M, m) for affine and shifted-affine operators.
  Affine affine_parts() const {
    if (const auto* a = std::get_if<Affine>(&kind_)) return *a;
    if (const auto* sh = std::get_if<Shifted>(&kind_)) {
      if (sh->base->is_affine()) {
        Affine base = sh->base->affine_parts();
        return Affine{base.matrix + sh->shift, base.offset};
      }
    }
    throw InvalidArgument("operator is not affine");
  }

  template <typename Derived>
  VectorType operator()(const Eigen::MatrixBase<Derived>& x) const {
    require_dim(x.size(), dim_, "operator eval");
    const VectorType xv = x;
    return std::visit([&](const auto& k) { return eval_kind(k, xv); }, kind_);
  }

  template <typename Derived>
  MatrixType jacobian(const Eigen::MatrixBase<Derived>& x) const {
    require_dim(x.size(), dim_, "operator jacobian");
    const VectorType xv = x;
    return std::visit([&](const auto& k) { return jacobian_kind(k, xv); }, kind_);
  }

  /// Central-difference Jacobian of the evaluation map, step h*(1 + |x|).
  MatrixType finite_difference_jacobian(const VectorType& x, Scalar h = Scalar(1e-6)) const {
    const Scalar step = h * (Scalar(1) + x.norm());
    MatrixType jac(dim_, dim_);
    VectorType xp = x, xm = x;
    for (Eigen::Index j = 0; j < dim_; ++j) {
      xp(j) = x(j) + step;
      xm(j) = x(j) - step;
      jac.col(j) = ((*this)(xp) - (*this)(xm)) / (Scalar(2) * step);
      xp(j) = x(j);
      xm(j) = x(j);
    }
    return jac;
  }

 private:
  Operator(Kind kind, Eigen::Index n) : kind_(std::move(kind)), dim_(n) {}

  static VectorType eval_kind(const Affine& a, const VectorType& x) { return a.matrix * x - a.offset; }
  static VectorType eval_kind(const SmoothGradient& g, const VectorType& x) { return g.gradient(x); }
  static VectorType eval_kind(const Mapping& m, const VectorType& x) { return m.map(x); }
  static VectorType eval_kind(const Shifted& s, const VectorType& x) { return (*s.base)(x) + s.shift * x; }

  MatrixType jacobian_kind(const Affine& a, const VectorType&) const { return a.matrix; }
  MatrixType jacobian_kind(const SmoothGradient& g, const VectorType& x) const {
    if (g.hessian) return g.hessian(x);
    return finite_difference_jacobian(x);
  }
  MatrixType jacobian_kind(const Mapping& m, const VectorType& x) const {
    if (!m.jacobian) throw NotDifferentiable("mapping operator has no Jacobian");
    return m.jacobian(x);
  }
  MatrixType jacobian_kind(const Shifted& s, const VectorType& x) const {
    return s.base->jacobian(x) + s.shift;
  }

  Kind kind_;
  Eigen::Index dim_;
};

template <typename Scalar, typename Derived>
Vector<Scalar> eval(const Operator<Scalar>& op, const Eigen::MatrixBase<Derived>& x) {
  return op(x);
}

template <typename Scalar, typename Derived>
Matrix<Scalar> jacobian(const Operator<Scalar>& op, const Eigen::MatrixBase<Derived>& x) {
  return op.jacobian(x);
}

template <typename Scalar>
struct ResolventResult {
  Vector<Scalar> point;
  Scalar residual = Scalar(0);  ///< |q + S(q)/gamma - v|
  int iterations = 0;           ///< Newton steps; 0 for the closed-form affine solve
};

struct ResolventOptions {
  std::optional<double> tol;  ///< default 1e-10 * (1 + |v|)
  int max_newton = 100;
};

/// |det(a)| < 1e-14 * |a|_inf^n, i.e. singular relative to the matrix scale.
template <typename Scalar>
bool is_numerically_singular(const Matrix<Scalar>& a, const Eigen::PartialPivLU<Matrix<Scalar>>& lu) {
  using std::abs;
  using std::pow;
  const Scalar scale = a.cwiseAbs().rowwise().sum().maxCoeff();
  if (scale == Scalar(0)) return true;
  const Scalar rel_det = abs(lu.determinant()) / pow(scale, static_cast<Scalar>(a.rows()));
  return rel_det < Scalar(1e-14);
}

namespace detail {

/// Solves A q + c S(q) = b: a direct solve for affine S, damped Newton from
/// `start` otherwise (step halving down to 2^-30).
template <typename Scalar>
ResolventResult<Scalar> solve_linear_plus_operator(const Operator<Scalar>& op, const Matrix<Scalar>& a,
                                                   Scalar c, const Vector<Scalar>& b,
                                                   const Vector<Scalar>& start, Scalar tol,
                                                   int max_newton, const char* who) {
  using VectorType = Vector<Scalar>;
  using MatrixType = Matrix<Scalar>;
  auto residual_of = [&](const VectorType& q) -> VectorType { return a * q + c * op(q) - b; };

  if (op.is_affine()) {
    const auto parts = op.affine_parts();
    const MatrixType lhs = a + c * parts.matrix;
    Eigen::PartialPivLU<MatrixType> lu(lhs);
    if (is_numerically_singular(lhs, lu)) {
      throw SingularResolvent(std::string(who) + ": linear system is singular");
    }
    const VectorType rhs = b + c * parts.offset;
    VectorType q = lu.solve(rhs);
    q += lu.solve(rhs - lhs * q);  // one refinement sweep
    return {q, residual_of(q).norm(), 0};
  }

  VectorType q = start;
  VectorType f = residual_of(q);
  Scalar fnorm = f.norm();
  int it = 0;
  const Scalar floor = std::ldexp(Scalar(1), -30);
  while (fnorm > tol) {
    if (it >= max_newton) {
      throw NewtonDivergence(std::string(who) + ": Newton did not reach tolerance within " +
                             std::to_string(max_newton) + " steps");
    }
    const MatrixType jac = a + c * op.jacobian(q);
    const VectorType step = jac.partialPivLu().solve(-f);
    if (!step.allFinite()) throw NewtonDivergence(std::string(who) + ": Newton step is not finite");
    Scalar t = Scalar(1);
    VectorType trial = q + step;
    VectorType ftrial = residual_of(trial);
    while (!(ftrial.norm() < fnorm)) {
      t *= Scalar(0.5);
      if (t < floor) {
        throw NewtonDivergence(std::string(who) + ": line search failed to reduce the residual");
      }
      trial = q + t * step;
      ftrial = residual_of(trial);
    }
    q = std::move(trial);
    f = std::move(ftrial);
    fnorm = f.norm();
    ++it;
  }
  return {q, fnorm, it};
}

}  // namespace detail

/// q = J_{S/gamma}(v), i.e. the solution of q + S(q)/gamma = v.
/// Affine operators use a direct solve; everything else runs damped Newton
/// warm-started at v.
template <typename Scalar, typename Derived>
ResolventResult<Scalar> resolvent(const Operator<Scalar>& op, std::type_identity_t<Scalar> gamma,
                                  const Eigen::MatrixBase<Derived>& v,
                                  const ResolventOptions& opts = {}) {
  if (!(gamma > Scalar(0))) throw InvalidArgument("resolvent: gamma must be positive");
  const Eigen::Index n = op.dim();
  require_dim(v.size(), n, "resolvent");
  const Vector<Scalar> anchor = v;
  const Scalar tol = opts.tol ? static_cast<Scalar>(*opts.tol)
                              : Scalar(1e-10) * (Scalar(1) + anchor.norm());
  return detail::solve_linear_plus_operator<Scalar>(op, Matrix<Scalar>::Identity(n, n),
                                                        Scalar(1) / gamma, anchor, anchor, tol,
                                                        opts.max_newton, "resolvent");
}

using OperatorXd = Operator<double>;

}  // namespace progdec
