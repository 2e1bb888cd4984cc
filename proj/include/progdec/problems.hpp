#pragma once

#include "progdec/certify.hpp"
#include "progdec/core.hpp"
#include "progdec/operators.hpp"
#include "progdec/partial_inverse.hpp"
#include "progdec/subspace.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace progdec {

/// Operator, subspace and everything known about the solution set.
template <typename Scalar>
struct LinkageProblem {
  Operator<Scalar> op;
  Subspace<Scalar> subspace;
  std::vector<GraphPoint<Scalar>> known_solutions;
  /// Global certificate, for affine operators.
  std::optional<SemimonCertificate<Scalar>> certificate;
  /// Moduli valid only at the first known solution (and inside `region`, when set).
  std::optional<Moduli<Scalar>> anchored;
  std::optional<SamplingRegion<Scalar>> region;
  std::string label;
  std::map<std::string, Scalar> metadata;

  /// Moduli from whichever certificate is attached.
  std::optional<Moduli<Scalar>> moduli() const {
    if (certificate) return Moduli<Scalar>{certificate->mu, certificate->rho};
    return anchored;
  }

  /// Membership of a primal point in the validity region; always true without one.
  std::function<bool(const GraphPoint<Scalar>&)> region_predicate() const {
    if (!region || known_solutions.empty()) return {};
    const Vector<Scalar> center = region->center.size() > 0 ? region->center : known_solutions.front().primal;
    const auto reg = *region;
    return [center, reg](const GraphPoint<Scalar>& p) {
      const Vector<Scalar> d = p.primal - center;
      if (reg.shape == SamplingRegion<Scalar>::Shape::Box) return d.cwiseAbs().maxCoeff() <= reg.radius;
      return d.norm() <= reg.radius;
    };
  }
};

/// S = (1/a)[[1+a^2, 1], [1, 1]] on X = {(t, 0)}. With gamma = 1 and
/// lambda_x = lambda_y = lambda the iteration converges iff lambda < 2(1 + a/(1+a^2)).
template <typename Scalar = double>
LinkageProblem<Scalar> tightness_problem(std::type_identity_t<Scalar> a) {
  if (a == Scalar(0)) throw InvalidArgument("tightness_problem: a must be nonzero");
  Matrix<Scalar> m(2, 2);
  m << Scalar(1) + a * a, Scalar(1), Scalar(1), Scalar(1);
  m /= a;
  Vector<Scalar> e1(2);
  e1 << Scalar(1), Scalar(0);
  const auto s = Subspace<Scalar>::from_basis({e1});
  const Scalar rho_a = a / (Scalar(1) + a * a);

  LinkageProblem<Scalar> p{Operator<Scalar>::linear(m), s, {}, {}, {}, {}, "tightness", {}};
  p.known_solutions.push_back({Vector<Scalar>::Zero(2), Vector<Scalar>::Zero(2)});
  p.certificate = check_semimonotone_linear<Scalar>(m, s, rho_a, rho_a);
  p.metadata["a"] = a;
  p.metadata["rho_a"] = rho_a;
  p.metadata["lambda_sup"] = Scalar(2) * (Scalar(1) + rho_a);
  return p;
}

/// Consensus splitting of M1 x + M2 x = b with M1 = [[-1,2],[-2,-1]],
/// M2 = [[0,1],[0,0]], b = (2,-3). Globally (-P_Xperp, -P_X/2)-semimonotone.
template <typename Scalar = double>
LinkageProblem<Scalar> linear_system_problem() {
  Matrix<Scalar> m = Matrix<Scalar>::Zero(4, 4);
  m.template topLeftCorner<2, 2>() << -1, 2, -2, -1;
  m.template bottomRightCorner<2, 2>() << 0, 1, 0, 0;
  Vector<Scalar> offset(4);
  offset << 0, 0, 2, -3;
  const auto s = consensus_subspace<Scalar>(2, 2);

  LinkageProblem<Scalar> p{Operator<Scalar>::affine(m, offset), s, {}, {}, {}, {}, "linear-system", {}};
  Vector<Scalar> xs(4), ys(4);
  xs << 1, 1, 1, 1;
  ys << 1, -3, -1, 3;
  p.known_solutions.push_back({xs, ys});
  p.certificate = check_semimonotone_linear<Scalar>(m, s, Scalar(-1), Scalar(-0.5));
  p.metadata["gamma_lo"] = Scalar(1);
  p.metadata["gamma_hi"] = Scalar(2);
  return p;
}

/// Gradient of f(x) = x1 x2 + b (x3 - x1^2)^2 on X = {x1 = x2}, anchored at the
/// origin with moduli (-9/4, -1/4).
template <typename Scalar = double>
LinkageProblem<Scalar> rosenbrock_problem(std::type_identity_t<Scalar> b = Scalar(1)) {
  if (!(b > Scalar(0))) throw InvalidArgument("rosenbrock_problem: b must be positive");
  using V = Vector<Scalar>;
  using M = Matrix<Scalar>;
  auto value = [b](const V& x) {
    const Scalar r = x(2) - x(0) * x(0);
    return x(0) * x(1) + b * r * r;
  };
  auto grad = [b](const V& x) {
    const Scalar r = x(2) - x(0) * x(0);
    V g(3);
    g << x(1) - Scalar(4) * b * x(0) * r, x(0), Scalar(2) * b * r;
    return g;
  };
  auto hess = [b](const V& x) {
    M h(3, 3);
    h << Scalar(12) * b * x(0) * x(0) - Scalar(4) * b * x(2), Scalar(1), Scalar(-4) * b * x(0),
        Scalar(1), Scalar(0), Scalar(0),
        Scalar(-4) * b * x(0), Scalar(0), Scalar(2) * b;
    return h;
  };
  V d(3);
  d << 1, 1, 0;
  V e3(3);
  e3 << 0, 0, 1;
  LinkageProblem<Scalar> p{Operator<Scalar>::smooth_gradient(3, value, grad, hess),
                           Subspace<Scalar>::from_basis({d, e3}), {}, {}, {}, {}, "rosenbrock", {}};
  p.known_solutions.push_back({V::Zero(3), V::Zero(3)});
  p.anchored = Moduli<Scalar>{Scalar(-9) / 4, Scalar(-1) / 4};
  p.metadata["b"] = b;
  return p;
}

/// Gradient of f(x) = x1^2/2 + x2^2/2 - x1^2 x2^2/4 on X = {x1 = x2}, anchored
/// at the origin with moduli (0, 1) on the ball of radius 2.
template <typename Scalar = double>
LinkageProblem<Scalar> double_well_problem() {
  using V = Vector<Scalar>;
  using M = Matrix<Scalar>;
  auto value = [](const V& x) {
    return Scalar(0.5) * (x(0) * x(0) + x(1) * x(1)) - Scalar(0.25) * x(0) * x(0) * x(1) * x(1);
  };
  auto grad = [](const V& x) {
    V g(2);
    g << x(0) - Scalar(0.5) * x(0) * x(1) * x(1), x(1) - Scalar(0.5) * x(0) * x(0) * x(1);
    return g;
  };
  auto hess = [](const V& x) {
    M h(2, 2);
    h << Scalar(1) - Scalar(0.5) * x(1) * x(1), -x(0) * x(1), -x(0) * x(1), Scalar(1) - Scalar(0.5) * x(0) * x(0);
    return h;
  };
  V d(2);
  d << 1, 1;
  LinkageProblem<Scalar> p{Operator<Scalar>::smooth_gradient(2, value, grad, hess),
                           Subspace<Scalar>::from_basis({d}), {}, {}, {}, {}, "double-well", {}};
  p.known_solutions.push_back({V::Zero(2), V::Zero(2)});
  p.anchored = Moduli<Scalar>{Scalar(0), Scalar(1)};
  p.region = SamplingRegion<Scalar>::ball(Scalar(2));
  return p;
}

namespace detail {

/// Largest rho <= 0 with sym(A) - mu I - rho A^T A PSD, by bisection; nullopt
/// when even rho = lo fails.
template <typename Scalar>
std::optional<Scalar> best_block_rho(const Matrix<Scalar>& a, Scalar mu, Scalar lo = Scalar(-1e6)) {
  const Eigen::Index n = a.rows();
  const Matrix<Scalar> sym = Scalar(0.5) * (a + a.transpose()) - mu * Matrix<Scalar>::Identity(n, n);
  const Matrix<Scalar> ata = a.transpose() * a;
  auto ok = [&](Scalar rho) { return min_sym_eigenvalue((sym - rho * ata).eval()) >= -Scalar(kPsdTolerance); };
  if (ok(Scalar(0))) return Scalar(0);
  if (!ok(lo)) return std::nullopt;
  Scalar hi = Scalar(0);
  for (int i = 0; i < 200 && hi - lo > Scalar(1e-13) * (Scalar(1) + std::abs(lo)); ++i) {
    const Scalar mid = Scalar(0.5) * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace detail

/// Smallest nu with A^T E A >= nu A^T A on range(A^T A), E the blockwise
/// all-ones pattern. Zero when A = 0.
template <typename Scalar>
Scalar consensus_nu(const Matrix<Scalar>& a, Eigen::Index blocks, Eigen::Index block_dim) {
  const Matrix<Scalar> ata = a.transpose() * a;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(ata);
  const Scalar cut = Scalar(1e-12) * std::max(Scalar(1), es.eigenvalues().cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < ata.rows(); ++i) {
    if (es.eigenvalues()(i) > cut) keep.push_back(i);
  }
  if (keep.empty()) return Scalar(0);
  Matrix<Scalar> w(ata.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    w.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]) / std::sqrt(es.eigenvalues()(keep[j]));
  }
  Matrix<Scalar> e(blocks * block_dim, blocks * block_dim);
  for (Eigen::Index i = 0; i < blocks; ++i)
    for (Eigen::Index j = 0; j < blocks; ++j)
      e.block(i * block_dim, j * block_dim, block_dim, block_dim).setIdentity();
  return min_sym_eigenvalue((w.transpose() * a.transpose() * e * a * w).eval());
}

/// Solve sum_i A_i x = b by consensus splitting: S = blkdiag(A_i) - (0, ..., b)
/// on the consensus subspace. When every block is (mu, rho)-semimonotone with
/// mu >= 0 >= rho, S is (mu P_Xperp, (N rho / nu) P_X)-semimonotone. Defaults:
/// mu = 0 and the largest admissible rho <= 0. The certificate is attached only
/// if it verifies.
template <typename Scalar = double>
LinkageProblem<Scalar> consensus_splitting_problem(const std::vector<Matrix<Scalar>>& blocks,
                                                   const Vector<Scalar>& b,
                                                   std::optional<Scalar> mu = std::nullopt,
                                                   std::optional<Scalar> rho = std::nullopt) {
  if (blocks.empty()) throw InvalidArgument("consensus_splitting_problem: need at least one block");
  const Eigen::Index n = b.size();
  const auto nb = static_cast<Eigen::Index>(blocks.size());
  Matrix<Scalar> a = Matrix<Scalar>::Zero(nb * n, nb * n);
  Matrix<Scalar> sum = Matrix<Scalar>::Zero(n, n);
  for (Eigen::Index i = 0; i < nb; ++i) {
    const auto& ai = blocks[static_cast<std::size_t>(i)];
    require_dim(ai.rows(), n, "consensus_splitting_problem block rows");
    require_dim(ai.cols(), n, "consensus_splitting_problem block cols");
    a.block(i * n, i * n, n, n) = ai;
    sum += ai;
  }
  Vector<Scalar> offset = Vector<Scalar>::Zero(nb * n);
  offset.tail(n) = b;
  const auto s = consensus_subspace<Scalar>(nb, n);

  LinkageProblem<Scalar> p{Operator<Scalar>::affine(a, offset), s, {}, {}, {}, {}, "consensus", {}};

  Eigen::FullPivLU<Matrix<Scalar>> lu(sum);
  const Vector<Scalar> x = lu.solve(b);
  if ((sum * x - b).norm() <= Scalar(1e-10) * (Scalar(1) + b.norm())) {
    const Vector<Scalar> xs = x.replicate(nb, 1);
    p.known_solutions.push_back({xs, p.op(xs)});
  }

  if (mu && *mu < Scalar(0)) throw InvalidArgument("consensus_splitting_problem: mu must be nonnegative");
  if (rho && *rho > Scalar(0)) throw InvalidArgument("consensus_splitting_problem: rho must be nonpositive");
  const Scalar mu_v = mu.value_or(Scalar(0));
  std::optional<Scalar> rho_v = rho;
  if (!rho_v) {
    rho_v = Scalar(0);
    for (const auto& ai : blocks) {
      const auto r = detail::best_block_rho<Scalar>(ai, mu_v);
      if (!r) {
        rho_v.reset();
        break;
      }
      rho_v = std::min(*rho_v, *r);
    }
  }
  const Scalar nu = consensus_nu<Scalar>(a, nb, n);
  p.metadata["nu"] = nu;
  if (rho_v) {
    p.metadata["block_mu"] = mu_v;
    p.metadata["block_rho"] = *rho_v;
    std::optional<Scalar> rho_out;
    if (*rho_v == Scalar(0)) rho_out = Scalar(0);
    else if (nu > Scalar(0)) rho_out = Scalar(nb) * *rho_v / nu;
    if (rho_out) {
      auto cert = check_semimonotone_linear<Scalar>(a, s, mu_v, *rho_out);
      if (cert.feasible) p.certificate = std::move(cert);
    }
  }
  return p;
}

}  // namespace progdec
