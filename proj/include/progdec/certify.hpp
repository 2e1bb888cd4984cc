#pragma once

#include "progdec/config.hpp"
#include "progdec/core.hpp"
#include "progdec/operators.hpp"
#include "progdec/partial_inverse.hpp"
#include "progdec/subspace.hpp"

#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace progdec {

/// Eigenvalue tolerance for PSD tests.
inline constexpr double kPsdTolerance = 1e-10;

// ---------------------------------------------------------------------------
// (mu P_Xperp, rho P_X)-semimonotonicity of linear maps
// ---------------------------------------------------------------------------

template <typename Scalar>
struct SemimonCertificate {
  Scalar mu = Scalar(0);
  Scalar rho = Scalar(0);
  Subspace<Scalar> subspace;
  Matrix<Scalar> test_matrix;  ///< sym(A) - mu P_Xperp - rho A^T P_X A
  Scalar margin = Scalar(0);   ///< smallest eigenvalue of test_matrix
  bool feasible = false;
};

/// A is (mu P_Xperp, rho P_X)-semimonotone iff
///   (A + A^T)/2 - mu P_Xperp - rho A^T P_X A  is PSD.
template <typename Scalar>
SemimonCertificate<Scalar> check_semimonotone_linear(const Matrix<Scalar>& a,
                                                     const Subspace<Scalar>& s,
                                                     std::type_identity_t<Scalar> mu,
                                                     std::type_identity_t<Scalar> rho) {
  const Eigen::Index n = s.ambient_dim();
  require_dim(a.rows(), n, "check_semimonotone_linear rows");
  require_dim(a.cols(), n, "check_semimonotone_linear cols");
  Matrix<Scalar> t = Scalar(0.5) * (a + a.transpose()) - mu * s.complement_projector() -
                     rho * a.transpose() * s.projector() * a;
  t = Scalar(0.5) * (t + t.transpose()).eval();
  const Scalar margin = min_sym_eigenvalue(t);
  return {mu, rho, s, std::move(t), margin, margin >= -Scalar(kPsdTolerance)};
}

// ---------------------------------------------------------------------------
// Elicitation bound for linear maps strongly monotone on X
// ---------------------------------------------------------------------------

template <typename Scalar>
struct ElicitationReport {
  Matrix<Scalar> a_bar;  ///< sym(A) - rho A^T P_X A
  Scalar beta = Scalar(0);
  Scalar sigma = Scalar(0);
  Scalar mu_out = Scalar(0);  ///< sigma - beta^2 / mu_in
};

/// Given <x, Ax> >= mu_in |x|^2 + rho |P_X A x|^2 on X with mu_in > 0, A is
/// ((sigma - beta^2/mu_in) P_Xperp, rho P_X)-semimonotone on all of R^n.
/// sigma and beta are evaluated in orthonormal bases of X and X^perp.
template <typename Scalar>
ElicitationReport<Scalar> elicitation_bound(const Matrix<Scalar>& a, const Subspace<Scalar>& s,
                                            std::type_identity_t<Scalar> mu_in,
                                            std::type_identity_t<Scalar> rho) {
  const Eigen::Index n = s.ambient_dim();
  require_dim(a.rows(), n, "elicitation_bound rows");
  require_dim(a.cols(), n, "elicitation_bound cols");
  if (!(mu_in > Scalar(0))) throw InvalidArgument("elicitation_bound: mu_in must be strictly positive");
  if (s.dim() == n) throw InvalidArgument("elicitation_bound: X^perp is trivial, nothing to elicit");

  Matrix<Scalar> a_bar = Scalar(0.5) * (a + a.transpose()) - rho * a.transpose() * s.projector() * a;
  a_bar = Scalar(0.5) * (a_bar + a_bar.transpose()).eval();

  const Matrix<Scalar>& u = s.basis();
  const Matrix<Scalar> b = s.complement_basis();

  if (u.cols() > 0) {
    const Matrix<Scalar> on_x = u.transpose() * a_bar * u - mu_in * Matrix<Scalar>::Identity(u.cols(), u.cols());
    if (min_sym_eigenvalue(on_x) < -Scalar(kPsdTolerance)) {
      throw PreconditionOnX("elicitation_bound: <x, Ax> >= mu|x|^2 + rho|P_X A x|^2 fails on X");
    }
  }

  ElicitationReport<Scalar> rep;
  rep.sigma = min_sym_eigenvalue((b.transpose() * a_bar * b).eval());
  if (u.cols() > 0) {
    Eigen::JacobiSVD<Matrix<Scalar>> svd(u.transpose() * a_bar * b);
    rep.beta = svd.singularValues().size() > 0 ? svd.singularValues()(0) : Scalar(0);
  }
  rep.mu_out = rep.sigma - rep.beta * rep.beta / mu_in;
  rep.a_bar = std::move(a_bar);
  return rep;
}

// ---------------------------------------------------------------------------
// Stepsize planning
// ---------------------------------------------------------------------------

/// Admissible stepsizes for a (mu P_Xperp, rho P_X)-semimonotone operator:
///   gamma in ([mu]_-, 1/[rho]_-),  lambda_x in (0, 2(1 + gamma rho)),
///   lambda_y in (0, 2(1 + mu/gamma)).
template <typename Scalar>
struct StepsizePlan {
  Scalar mu = Scalar(0);
  Scalar rho = Scalar(0);
  Scalar gamma_lo = Scalar(0);
  Scalar gamma_hi = std::numeric_limits<Scalar>::infinity();

  Scalar lambda_x_sup(Scalar gamma) const { return Scalar(2) * (Scalar(1) + gamma * rho); }
  Scalar lambda_y_sup(Scalar gamma) const { return Scalar(2) * (Scalar(1) + mu / gamma); }

  bool gamma_admissible(Scalar gamma) const { return gamma > gamma_lo && gamma < gamma_hi; }

  bool admissible(Scalar gamma, Scalar lambda_x, Scalar lambda_y) const {
    return gamma_admissible(gamma) && lambda_x > Scalar(0) && lambda_x < lambda_x_sup(gamma) &&
           lambda_y > Scalar(0) && lambda_y < lambda_y_sup(gamma);
  }

  /// The guaranteed contraction constant min((1+gamma rho)/lambda_x, (1+mu/gamma)/lambda_y).
  Scalar alpha_bar(Scalar gamma, Scalar lambda_x, Scalar lambda_y) const {
    return std::min((Scalar(1) + gamma * rho) / lambda_x, (Scalar(1) + mu / gamma) / lambda_y);
  }
};

/// Throws EmptyPlan when [mu]_-[rho]_- >= 1.
template <typename Scalar>
StepsizePlan<Scalar> stepsize_plan(Scalar mu, std::type_identity_t<Scalar> rho) {
  const Scalar mu_neg = negative_part(mu);
  const Scalar rho_neg = negative_part(rho);
  if (mu_neg * rho_neg >= Scalar(1)) {
    throw EmptyPlan("stepsize plan: [mu]_-[rho]_- >= 1, no stepsize carries a guarantee");
  }
  StepsizePlan<Scalar> plan;
  plan.mu = mu;
  plan.rho = rho;
  plan.gamma_lo = mu_neg;
  plan.gamma_hi = rho_neg > Scalar(0) ? Scalar(1) / rho_neg : std::numeric_limits<Scalar>::infinity();
  return plan;
}

template <typename Scalar>
std::optional<StepsizePlan<Scalar>> try_stepsize_plan(Scalar mu, std::type_identity_t<Scalar> rho) {
  try {
    return stepsize_plan<Scalar>(mu, rho);
  } catch (const EmptyPlan&) {
    return std::nullopt;
  }
}

/// Moduli of a (mu P_Xperp, rho P_X)-semimonotone operator, used to validate presets.
template <typename Scalar>
struct Moduli {
  Scalar mu;
  Scalar rho;
};

namespace presets {

/// gamma = lambda_x = lambda_y = 1. Guaranteed when mu, rho > -1/2.
template <typename Scalar = double>
SolverConfig<Scalar> spingarn(std::optional<Moduli<Scalar>> moduli = std::nullopt) {
  if (moduli && !(moduli->mu > Scalar(-0.5) && moduli->rho > Scalar(-0.5))) {
    throw OutOfRange("spingarn: requires mu > -1/2 and rho > -1/2");
  }
  SolverConfig<Scalar> cfg;
  cfg.gamma = cfg.lambda_x = cfg.lambda_y = Scalar(1);
  return cfg;
}

/// Standard progressive decoupling: (gamma, 1, 1 - [mu]_-/gamma), needs gamma > [mu]_-.
template <typename Scalar = double>
SolverConfig<Scalar> progdec_classic(Scalar gamma, std::type_identity_t<Scalar> mu) {
  if (!(gamma > negative_part(mu))) throw OutOfRange("progdec_classic: requires gamma > [mu]_-");
  SolverConfig<Scalar> cfg;
  cfg.gamma = gamma;
  cfg.lambda_x = Scalar(1);
  cfg.lambda_y = Scalar(1) - negative_part(mu) / gamma;
  return cfg;
}

/// Relaxed Douglas-Rachford: (gamma, lambda, lambda). With moduli, also
/// enforces gamma in ([mu]_-, 1/[rho]_-) and lambda < 2(1 + min(gamma rho, mu/gamma)).
template <typename Scalar = double>
SolverConfig<Scalar> relaxed_drs(Scalar gamma, std::type_identity_t<Scalar> lambda,
                                 std::optional<Moduli<std::type_identity_t<Scalar>>> moduli = std::nullopt) {
  if (!(gamma > Scalar(0)) || !(lambda > Scalar(0))) {
    throw OutOfRange("relaxed_drs: gamma and lambda must be positive");
  }
  if (moduli) {
    const auto plan = try_stepsize_plan<Scalar>(moduli->mu, moduli->rho);
    if (!plan || !plan->admissible(gamma, lambda, lambda)) {
      throw OutOfRange("relaxed_drs: (gamma, lambda) outside the admissible region");
    }
  }
  SolverConfig<Scalar> cfg;
  cfg.gamma = gamma;
  cfg.lambda_x = cfg.lambda_y = lambda;
  return cfg;
}

}  // namespace presets

// ---------------------------------------------------------------------------
// Preconditioned proximal point admissibility
// ---------------------------------------------------------------------------

template <typename Scalar>
struct PppaCondition {
  bool admissible = false;  ///< alpha_bar > 1/2, i.e. Lambda < 2(I + M^1/2 V M^1/2)
  Scalar alpha_bar = Scalar(0);
};

namespace detail {

template <typename Scalar>
Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> spd_eigen(const Matrix<Scalar>& m, const char* name) {
  if (m.rows() != m.cols()) throw DimensionMismatch(std::string(name) + " must be square");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-10) * (Scalar(1) + m.cwiseAbs().maxCoeff())) {
    throw NotSPD(std::string(name) + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(Scalar(0.5) * (m + m.transpose()));
  if (!(es.eigenvalues().minCoeff() > Scalar(0))) throw NotSPD(std::string(name) + " is not positive definite");
  return es;
}

}  // namespace detail

/// alpha_bar = lambda_min(Lambda^{-1/2} (I + M^1/2 V M^1/2) Lambda^{-1/2}).
/// M and Lambda must be SPD and commute; V symmetric (zero when absent).
template <typename Scalar>
PppaCondition<Scalar> pppa_condition(const Matrix<Scalar>& m, const Matrix<Scalar>& lambda,
                                     const std::optional<Matrix<Scalar>>& v = std::nullopt) {
  const Eigen::Index n = m.rows();
  require_dim(lambda.rows(), n, "pppa_condition Lambda");
  const auto m_es = detail::spd_eigen(m, "preconditioner M");
  const auto l_es = detail::spd_eigen(lambda, "relaxation Lambda");
  if ((m * lambda - lambda * m).norm() > Scalar(1e-10)) {
    throw NonCommuting("pppa_condition: M and Lambda do not commute");
  }
  const Matrix<Scalar> m_half = m_es.operatorSqrt();
  const Matrix<Scalar> l_inv_half = l_es.operatorInverseSqrt();
  Matrix<Scalar> inner = Matrix<Scalar>::Identity(n, n);
  if (v) {
    require_dim(v->rows(), n, "pppa_condition V");
    require_dim(v->cols(), n, "pppa_condition V");
    inner += m_half * (*v) * m_half;
  }
  const Matrix<Scalar> w = l_inv_half * inner * l_inv_half;
  const Scalar alpha_bar = min_sym_eigenvalue(w);
  return {alpha_bar > Scalar(0.5), alpha_bar};
}

/// Structured matrices of the decoupling iteration viewed as a proximal point
/// method on the partial inverse: M = gamma P_X + P_Xperp/gamma,
/// Lambda = lambda_x P_X + lambda_y P_Xperp, V = rho P_X + mu P_Xperp.
template <typename Scalar>
struct StructuredPppa {
  Matrix<Scalar> preconditioner;
  Matrix<Scalar> relaxation;
  Matrix<Scalar> obliqueness;
};

template <typename Scalar>
StructuredPppa<Scalar> structured_pppa(const Subspace<Scalar>& s, const SolverConfig<Scalar>& cfg,
                                       std::type_identity_t<Scalar> mu = 0,
                                       std::type_identity_t<Scalar> rho = 0) {
  const auto& px = s.projector();
  const auto& pc = s.complement_projector();
  return {cfg.gamma * px + pc / cfg.gamma, cfg.lambda_x * px + cfg.lambda_y * pc, rho * px + mu * pc};
}

// ---------------------------------------------------------------------------
// Locality radius
// ---------------------------------------------------------------------------

template <typename Scalar>
struct LocalityEstimate {
  Scalar delta = Scalar(0);
  Scalar epsilon = Scalar(0);
};

/// Basin radius (in the solver metric) guaranteed by local maximal
/// semimonotonicity on balls of radius delta around a solution pair.
template <typename Scalar>
LocalityEstimate<Scalar> locality_epsilon(Scalar delta, std::type_identity_t<Scalar> gamma,
                                          std::type_identity_t<Scalar> lambda_x,
                                          std::type_identity_t<Scalar> lambda_y) {
  using std::sqrt;
  if (!(delta > 0) || !(gamma > 0) || !(lambda_x > 0) || !(lambda_y > 0)) {
    throw InvalidArgument("locality_epsilon: all inputs must be positive");
  }
  const Scalar ix = Scalar(1) / lambda_x;
  const Scalar iy = Scalar(1) / lambda_y;
  const Scalar metric = std::min(gamma * ix, Scalar(1) / (gamma * lambda_y));
  const Scalar num = delta * sqrt(metric) * std::min(gamma, Scalar(1) / gamma);
  const Scalar den = sqrt(Scalar(2)) * (Scalar(1) - std::min(ix, iy) + std::max(ix, iy));
  return {delta, num / den};
}

// ---------------------------------------------------------------------------
// Sampled and Jacobian-based checks for nonlinear operators
// ---------------------------------------------------------------------------

/// Sampling region for the primal variable, centered at `center` (the anchor
/// primal point when empty).
template <typename Scalar>
struct SamplingRegion {
  enum class Shape { Box, Ball };
  Shape shape = Shape::Ball;
  Scalar radius = Scalar(1);  ///< half-width for Box
  Vector<Scalar> center;

  static SamplingRegion box(Scalar half_width) { return {Shape::Box, half_width, {}}; }
  static SamplingRegion ball(Scalar radius) { return {Shape::Ball, radius, {}}; }
};

template <typename Scalar>
struct SampledCheck {
  bool holds = false;
  Scalar worst_violation = Scalar(0);  ///< smallest slack seen (negative = violated)
  Vector<Scalar> worst_point;
};

inline constexpr double kSampledSlackTolerance = 1e-8;

/// Slack of <x - xa, y - ya> >= mu |P_Xperp (x - xa)|^2 + rho |P_X (y - ya)|^2
/// at a graph point (x, y), anchored at (xa, ya).
template <typename Scalar>
Scalar semimon_slack(const Subspace<Scalar>& s, const GraphPoint<Scalar>& anchor,
                     const GraphPoint<Scalar>& p, Scalar mu, Scalar rho) {
  const Vector<Scalar> dx = p.primal - anchor.primal;
  const Vector<Scalar> dy = p.dual - anchor.dual;
  return dx.dot(dy) - mu * s.project_complement(dx).squaredNorm() - rho * s.project(dy).squaredNorm();
}

/// Evaluates the anchored semimonotonicity inequality at `samples` seeded
/// pseudo-random points of the region. holds <=> min slack >= -1e-8.
template <typename Scalar>
SampledCheck<Scalar> sampled_semimon_check(const Operator<Scalar>& op, const Subspace<Scalar>& s,
                                           const GraphPoint<Scalar>& anchor,
                                           std::type_identity_t<Scalar> mu,
                                           std::type_identity_t<Scalar> rho,
                                           const SamplingRegion<Scalar>& region, int samples = 10000,
                                           std::uint64_t seed = 20240607) {
  const Eigen::Index n = op.dim();
  require_dim(anchor.primal.size(), n, "sampled_semimon_check anchor");
  if (samples <= 0) throw InvalidArgument("sampled_semimon_check: samples must be positive");
  const Vector<Scalar> center = region.center.size() == n ? region.center : anchor.primal;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SampledCheck<Scalar> out;
  out.worst_violation = std::numeric_limits<Scalar>::infinity();
  Vector<Scalar> x(n);
  for (int i = 0; i < samples; ++i) {
    if (region.shape == SamplingRegion<Scalar>::Shape::Box) {
      for (Eigen::Index j = 0; j < n; ++j) x(j) = center(j) + region.radius * Scalar(unif(rng));
    } else {
      Vector<Scalar> dir(n);
      for (Eigen::Index j = 0; j < n; ++j) dir(j) = Scalar(gauss(rng));
      const Scalar r = region.radius * Scalar(std::pow(unit(rng), 1.0 / static_cast<double>(n)));
      x = center + r * dir / dir.norm();
    }
    const Scalar slack = semimon_slack<Scalar>(s, anchor, {x, op(x)}, mu, rho);
    if (slack < out.worst_violation) {
      out.worst_violation = slack;
      out.worst_point = x;
    }
  }
  out.holds = out.worst_violation >= -Scalar(kSampledSlackTolerance);
  return out;
}

template <typename Scalar>
struct JacobianCheck {
  bool holds = false;
  Scalar worst_margin = Scalar(0);  ///< min over points of the X-restricted eigenvalue
};

/// Checks <x, J x> >= mu |x|^2 + rho |P_X J x|^2 for all x in X, with J the
/// Jacobian at each supplied point, as a PSD test of
///   U^T (sym(J) - mu I - rho J^T P_X J) U.
template <typename Scalar>
JacobianCheck<Scalar> jacobian_condition_check(const Operator<Scalar>& op, const Subspace<Scalar>& s,
                                               std::type_identity_t<Scalar> mu,
                                               std::type_identity_t<Scalar> rho,
                                               const std::vector<Vector<Scalar>>& points) {
  if (points.empty()) throw InvalidArgument("jacobian_condition_check: no sample points");
  const Eigen::Index n = op.dim();
  const Matrix<Scalar>& u = s.basis();
  JacobianCheck<Scalar> out;
  out.worst_margin = std::numeric_limits<Scalar>::infinity();
  for (const auto& p : points) {
    const Matrix<Scalar> j = op.jacobian(p);
    const Matrix<Scalar> t = Scalar(0.5) * (j + j.transpose()) - mu * Matrix<Scalar>::Identity(n, n) -
                             rho * j.transpose() * s.projector() * j;
    out.worst_margin = std::min(out.worst_margin, min_sym_eigenvalue((u.transpose() * t * u).eval()));
  }
  out.holds = out.worst_margin >= -Scalar(kPsdTolerance);
  return out;
}

using SemimonCertificateXd = SemimonCertificate<double>;
using StepsizePlanXd = StepsizePlan<double>;

}  // namespace progdec
