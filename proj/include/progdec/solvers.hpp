#pragma once

#include "progdec/certify.hpp"
#include "progdec/config.hpp"
#include "progdec/core.hpp"
#include "progdec/operators.hpp"
#include "progdec/partial_inverse.hpp"
#include "progdec/subspace.hpp"
#include "progdec/trace.hpp"

#include <functional>
#include <optional>
#include <sstream>

namespace progdec {

/// Iterates that leave this bound (Lyapunov value, or |(x, y)| when no
/// solution is known) are reported as Diverged.
inline constexpr double kDivergenceThreshold = 1e12;

/// Feasibility of the starting pair; larger violations are projected away
/// with a warning.
inline constexpr double kStartFeasibilityTol = 1e-9;

template <typename Scalar>
struct IterateState {
  Vector<Scalar> x;  ///< in X
  Vector<Scalar> y;  ///< in X^perp
  int k = 0;
};

/// Everything one step produces besides the next state.
template <typename Scalar>
struct StepRecord {
  Vector<Scalar> q;     ///< resolvent point
  Vector<Scalar> xbar;  ///< P_X q
  Vector<Scalar> ybar;  ///< y - gamma P_Xperp q
  Scalar res = Scalar(0);
};

template <typename Scalar>
struct RunOptions {
  std::optional<GraphPoint<Scalar>> known_solution;
  std::optional<Moduli<Scalar>> moduli;  ///< enables the obliqueness V in halfspace diagnostics
  /// Membership test for (q, S(q)); rejection flags the row but never stops the run.
  std::function<bool(const GraphPoint<Scalar>&)> region;
  ResolventOptions resolvent;
};

/// res = gamma lambda_x |xbar - x|^2 + lambda_y/gamma |ybar - y|^2
template <typename Scalar>
Scalar natural_residual(const SolverConfig<Scalar>& cfg, const Vector<Scalar>& x, const Vector<Scalar>& y,
                        const Vector<Scalar>& xbar, const Vector<Scalar>& ybar) {
  return cfg.gamma * cfg.lambda_x * (xbar - x).squaredNorm() +
         cfg.lambda_y / cfg.gamma * (ybar - y).squaredNorm();
}

/// gamma/lambda_x |x - x*|^2 + 1/(gamma lambda_y) |y - y*|^2
template <typename Scalar>
Scalar lyapunov_value(const SolverConfig<Scalar>& cfg, const Vector<Scalar>& x, const Vector<Scalar>& y,
                      const GraphPoint<Scalar>& sol) {
  return cfg.gamma / cfg.lambda_x * (x - sol.primal).squaredNorm() +
         (y - sol.dual).squaredNorm() / (cfg.gamma * cfg.lambda_y);
}

// ---------------------------------------------------------------------------
// Halfspace diagnostics
// ---------------------------------------------------------------------------

template <typename Scalar>
struct HalfspaceDiagnostics {
  Scalar alpha = TraceRow<Scalar>::kMissing;      ///< |z - zbar|^2_{M+MVM} / |z - zbar|^2_{M Lambda}
  Scalar alpha_bar = TraceRow<Scalar>::kMissing;  ///< lambda_min((I + M^1/2 V M^1/2) Lambda^{-1})
  Scalar gap = TraceRow<Scalar>::kMissing;        ///< <M(z - zbar), zbar - r> - <M(z - zbar), V M(z - zbar)>
};

/// Diagnostics of one proximal step z -> zbar. `v` may be empty (V = 0); the
/// gap is evaluated only when a reference point is supplied.
template <typename Scalar>
HalfspaceDiagnostics<Scalar> halfspace_diagnostics(const Matrix<Scalar>& m, const Matrix<Scalar>& lambda,
                                                   const Matrix<Scalar>& v, const Vector<Scalar>& z,
                                                   const Vector<Scalar>& zbar,
                                                   const Vector<Scalar>* reference = nullptr) {
  HalfspaceDiagnostics<Scalar> d;
  const Vector<Scalar> diff = z - zbar;
  const Vector<Scalar> md = m * diff;
  const Scalar vterm = v.size() > 0 ? md.dot(v * md) : Scalar(0);
  const Scalar denom = diff.dot(m * (lambda * diff));
  if (denom > Scalar(0)) d.alpha = (diff.dot(md) + vterm) / denom;
  if (reference) d.gap = md.dot(zbar - *reference) - vterm;
  return d;
}

// ---------------------------------------------------------------------------
// Three-parameter decoupling iteration
// ---------------------------------------------------------------------------

/// One step:
///   q = J_{S/gamma}(x + y/gamma),  xbar = P_X q,  ybar = y - gamma P_Xperp q,
///   x+ = x + lambda_x (xbar - x),  y+ = y + lambda_y (ybar - y).
template <typename Scalar>
std::pair<IterateState<Scalar>, StepRecord<Scalar>> progdec_step(const Operator<Scalar>& op,
                                                                 const Subspace<Scalar>& s,
                                                                 const SolverConfig<Scalar>& cfg,
                                                                 const IterateState<Scalar>& st,
                                                                 const ResolventOptions& ropts = {}) {
  require_dim(st.x.size(), s.ambient_dim(), "progdec_step x");
  require_dim(st.y.size(), s.ambient_dim(), "progdec_step y");
  StepRecord<Scalar> rec;
  rec.q = resolvent(op, cfg.gamma, (st.x + st.y / cfg.gamma).eval(), ropts).point;
  rec.xbar = s.project(rec.q);
  rec.ybar = st.y - cfg.gamma * s.project_complement(rec.q);
  rec.res = natural_residual(cfg, st.x, st.y, rec.xbar, rec.ybar);
  IterateState<Scalar> next;
  next.x = st.x + cfg.lambda_x * (rec.xbar - st.x);
  next.y = st.y + cfg.lambda_y * (rec.ybar - st.y);
  next.k = st.k + 1;
  return {std::move(next), std::move(rec)};
}

namespace detail {

template <typename Scalar>
void project_start(const Subspace<Scalar>& s, Vector<Scalar>& x, Vector<Scalar>& y,
                   std::vector<std::string>& warnings) {
  const Scalar off_x = s.project_complement(x).norm();
  const Scalar off_y = s.project(y).norm();
  if (off_x > Scalar(kStartFeasibilityTol) || off_y > Scalar(kStartFeasibilityTol)) {
    std::ostringstream msg;
    msg << "starting pair projected onto X x X^perp (|P_Xperp x0| = " << off_x
        << ", |P_X y0| = " << off_y << ")";
    warnings.push_back(msg.str());
  }
  x = s.project(x);
  y = s.project_complement(y);
}

/// Shared driver for the linkage-coordinate solvers. `step` maps the current
/// state to (next state, record).
template <typename Scalar, typename StepFn>
IterateTrace<Scalar> drive_linkage(const Operator<Scalar>& op, const SolverConfig<Scalar>& cfg,
                                   IterateState<Scalar> st, const RunOptions<Scalar>& opts,
                                   const std::optional<StructuredPppa<Scalar>>& structure,
                                   IterateTrace<Scalar> trace, StepFn&& step) {
  const Scalar stop = cfg.tol * cfg.tol;
  trace.space = TraceSpace::Linkage;
  trace.status = RunStatus::MaxIter;
  Vector<Scalar> z_star;
  if (opts.known_solution) z_star = opts.known_solution->primal + opts.known_solution->dual;

  for (int k = 0; k < cfg.max_iter; ++k) {
    st.k = k;
    TraceRow<Scalar> row;
    row.k = k;
    const Scalar size = opts.known_solution ? lyapunov_value(cfg, st.x, st.y, *opts.known_solution)
                                            : std::sqrt(st.x.squaredNorm() + st.y.squaredNorm());
    if (opts.known_solution) row.lyapunov = size;
    if (!std::isfinite(size) || size > Scalar(kDivergenceThreshold)) {
      trace.status = RunStatus::Diverged;
      break;
    }

    std::pair<IterateState<Scalar>, StepRecord<Scalar>> out;
    try {
      out = step(st);
    } catch (const Error& e) {
      trace.status = RunStatus::Error;
      trace.message = e.what();
      break;
    }
    auto& [next, rec] = out;
    row.res = rec.res;
    if (cfg.record_diagnostics && structure) {
      const Vector<Scalar> z = st.x + st.y;
      const Vector<Scalar> zbar = rec.xbar + rec.ybar;
      const auto d = halfspace_diagnostics(structure->preconditioner, structure->relaxation,
                                           structure->obliqueness, z, zbar,
                                           opts.known_solution ? &z_star : nullptr);
      row.alpha = d.alpha;
      row.gap = d.gap;
    }
    if (opts.region) {
      const Vector<Scalar> sq = op(rec.q);
      if (!opts.region(GraphPoint<Scalar>{rec.q, sq})) {
        row.left_region = true;
        trace.left_region = true;
      }
    }
    row.x = std::move(st.x);
    row.y = std::move(st.y);
    row.xbar = std::move(rec.xbar);
    row.ybar = std::move(rec.ybar);
    trace.rows.push_back(std::move(row));
    st = std::move(next);
    if (!std::isfinite(trace.rows.back().res)) {
      trace.status = RunStatus::Diverged;
      break;
    }
    if (trace.rows.back().res <= stop) {
      trace.status = RunStatus::Converged;
      break;
    }
  }
  trace.final_x = std::move(st.x);
  trace.final_y = std::move(st.y);
  return trace;
}

}  // namespace detail

/// Runs the decoupling iteration from (x0, y0) in X x X^perp until
/// res <= tol^2 (Converged), max_iter rows (MaxIter), the Lyapunov value or
/// iterate norm exceeds 1e12 (Diverged), or a resolvent failure (Error; the
/// partial trace is kept).
template <typename Scalar>
IterateTrace<Scalar> run_progdec(const Operator<Scalar>& op, const Subspace<Scalar>& s,
                                 const SolverConfig<Scalar>& cfg, Vector<Scalar> x0, Vector<Scalar> y0,
                                 const RunOptions<Scalar>& opts = {}) {
  cfg.validate();
  require_dim(op.dim(), s.ambient_dim(), "run_progdec operator");
  require_dim(x0.size(), s.ambient_dim(), "run_progdec x0");
  require_dim(y0.size(), s.ambient_dim(), "run_progdec y0");
  IterateTrace<Scalar> trace;
  detail::project_start(s, x0, y0, trace.warnings);

  const Scalar mu = opts.moduli ? opts.moduli->mu : Scalar(0);
  const Scalar rho = opts.moduli ? opts.moduli->rho : Scalar(0);
  std::optional<StructuredPppa<Scalar>> structure;
  if (cfg.record_diagnostics) structure = structured_pppa(s, cfg, mu, rho);
  if (opts.moduli && cfg.lambda_x > 0 && cfg.lambda_y > 0) {
    trace.alpha_bar = std::min((Scalar(1) + cfg.gamma * rho) / cfg.lambda_x,
                               (Scalar(1) + mu / cfg.gamma) / cfg.lambda_y);
  }

  IterateState<Scalar> st{std::move(x0), std::move(y0), 0};
  return detail::drive_linkage(op, cfg, std::move(st), opts, structure, std::move(trace),
                               [&](const IterateState<Scalar>& cur) {
                                 return progdec_step(op, s, cfg, cur, opts.resolvent);
                               });
}

// ---------------------------------------------------------------------------
// Relaxed Douglas-Rachford
// ---------------------------------------------------------------------------

template <typename Scalar>
struct DrsTrace {
  IterateTrace<Scalar> mapped;  ///< (x^k, y^k) = (P_X s^k, gamma (x^k - s^k))
  std::vector<Vector<Scalar>> shadow;  ///< s^k, one per recorded row
};

/// x = P_X s,  q = J_{S/gamma}(2x - s),  s+ = s + lambda (q - x).
/// The trace is reported in linkage coordinates, with shadow iterates kept alongside.
template <typename Scalar>
DrsTrace<Scalar> run_drs(const Operator<Scalar>& op, const Subspace<Scalar>& s, std::type_identity_t<Scalar> gamma,
                         std::type_identity_t<Scalar> lambda, Vector<Scalar> s0,
                         int max_iter = 10000, std::type_identity_t<Scalar> tol = Scalar(1e-9),
                         const RunOptions<Scalar>& opts = {}) {
  SolverConfig<Scalar> cfg;
  cfg.gamma = gamma;
  cfg.lambda_x = cfg.lambda_y = lambda;
  cfg.max_iter = max_iter;
  cfg.tol = tol;
  cfg.validate();
  require_dim(op.dim(), s.ambient_dim(), "run_drs operator");
  require_dim(s0.size(), s.ambient_dim(), "run_drs s0");

  DrsTrace<Scalar> out;
  std::optional<StructuredPppa<Scalar>> structure;
  const Scalar mu = opts.moduli ? opts.moduli->mu : Scalar(0);
  const Scalar rho = opts.moduli ? opts.moduli->rho : Scalar(0);
  if (cfg.record_diagnostics) structure = structured_pppa(s, cfg, mu, rho);

  Vector<Scalar> shadow = std::move(s0);
  IterateState<Scalar> st;
  st.x = s.project(shadow);
  st.y = gamma * (st.x - shadow);

  out.mapped = detail::drive_linkage(
      op, cfg, std::move(st), opts, structure, IterateTrace<Scalar>{},
      [&](const IterateState<Scalar>& cur) {
        const Vector<Scalar> x = s.project(shadow);
        const ResolventResult<Scalar> r = resolvent(op, gamma, (Scalar(2) * x - shadow).eval(), opts.resolvent);
        StepRecord<Scalar> rec;
        rec.q = r.point;
        rec.xbar = s.project(rec.q);
        rec.ybar = cur.y - gamma * s.project_complement(rec.q);
        rec.res = natural_residual(cfg, cur.x, cur.y, rec.xbar, rec.ybar);
        out.shadow.push_back(shadow);
        shadow = shadow + lambda * (rec.q - x);
        IterateState<Scalar> next;
        next.x = s.project(shadow);
        next.y = gamma * (next.x - shadow);
        next.k = cur.k + 1;
        return std::pair{std::move(next), std::move(rec)};
      });
  if (opts.moduli && lambda > 0) {
    out.mapped.alpha_bar = std::min((Scalar(1) + gamma * rho) / lambda, (Scalar(1) + mu / gamma) / lambda);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Relaxed preconditioned proximal point in z-space
// ---------------------------------------------------------------------------

template <typename Scalar>
struct PppaConfig {
  Matrix<Scalar> preconditioner;  ///< M, SPD
  Matrix<Scalar> relaxation;      ///< Lambda, SPD, commuting with M
  std::optional<Matrix<Scalar>> obliqueness;  ///< V, symmetric
  int max_iter = 10000;
  Scalar tol = Scalar(1e-9);

  void validate() const {
    const Eigen::Index n = preconditioner.rows();
    require_dim(preconditioner.cols(), n, "pppa preconditioner");
    require_dim(relaxation.rows(), n, "pppa relaxation");
    require_dim(relaxation.cols(), n, "pppa relaxation");
    detail::spd_eigen(preconditioner, "preconditioner M");
    detail::spd_eigen(relaxation, "relaxation Lambda");
    if ((preconditioner * relaxation - relaxation * preconditioner).norm() > Scalar(1e-10)) {
      throw NonCommuting("pppa config: M and Lambda do not commute");
    }
    if (obliqueness) {
      require_dim(obliqueness->rows(), n, "pppa obliqueness");
      require_dim(obliqueness->cols(), n, "pppa obliqueness");
    }
  }

  /// The structured configuration equivalent to the decoupling iteration.
  static PppaConfig structured(const Subspace<Scalar>& s, const SolverConfig<Scalar>& cfg,
                               std::optional<Moduli<Scalar>> moduli = std::nullopt) {
    const auto st = structured_pppa(s, cfg, moduli ? moduli->mu : Scalar(0), moduli ? moduli->rho : Scalar(0));
    PppaConfig out;
    out.preconditioner = st.preconditioner;
    out.relaxation = st.relaxation;
    if (moduli) out.obliqueness = st.obliqueness;
    out.max_iter = cfg.max_iter;
    out.tol = cfg.tol;
    return out;
  }
};

template <typename Scalar>
struct PppaStep {
  Vector<Scalar> next;  ///< z+ = z + Lambda (zbar - z)
  Vector<Scalar> zbar;  ///< (M + T)^{-1} M z
  HalfspaceDiagnostics<Scalar> diagnostics;
};

/// zbar solves M zbar + T(zbar) = M z (direct solve for affine T, damped
/// Newton otherwise). Diagnostics use V when configured and the reference
/// point when given.
template <typename Scalar>
PppaStep<Scalar> pppa_step(const Operator<Scalar>& t, const PppaConfig<Scalar>& cfg, const Vector<Scalar>& z,
                           const Vector<Scalar>* reference = nullptr, const ResolventOptions& ropts = {}) {
  const Eigen::Index n = t.dim();
  require_dim(z.size(), n, "pppa_step z");
  require_dim(cfg.preconditioner.rows(), n, "pppa_step M");
  const Vector<Scalar> mz = cfg.preconditioner * z;
  const Scalar tol = ropts.tol ? static_cast<Scalar>(*ropts.tol) : Scalar(1e-10) * (Scalar(1) + mz.norm());
  PppaStep<Scalar> out;
  out.zbar = detail::solve_linear_plus_operator<Scalar>(t, cfg.preconditioner, Scalar(1), mz, z, tol,
                                                       ropts.max_newton, "pppa_step")
                 .point;
  out.next = z + cfg.relaxation * (out.zbar - z);
  static const Matrix<Scalar> kNoV;
  out.diagnostics = halfspace_diagnostics(cfg.preconditioner, cfg.relaxation,
                                          cfg.obliqueness ? *cfg.obliqueness : kNoV, z, out.zbar, reference);
  if (cfg.obliqueness) {
    out.diagnostics.alpha_bar = pppa_condition<Scalar>(cfg.preconditioner, cfg.relaxation, cfg.obliqueness).alpha_bar;
  }
  return out;
}

namespace detail {

template <typename Scalar, typename ProxFn>
IterateTrace<Scalar> drive_zspace(const PppaConfig<Scalar>& cfg, Vector<Scalar> z,
                                  const std::optional<Vector<Scalar>>& solution, ProxFn&& prox) {
  IterateTrace<Scalar> trace;
  trace.space = TraceSpace::ZSpace;
  trace.status = RunStatus::MaxIter;
  const Matrix<Scalar> m_lambda = cfg.preconditioner * cfg.relaxation;
  const Matrix<Scalar> m_lambda_inv = cfg.preconditioner * cfg.relaxation.inverse();
  static const Matrix<Scalar> kNoV;
  const Matrix<Scalar>& v = cfg.obliqueness ? *cfg.obliqueness : kNoV;
  if (cfg.obliqueness) {
    trace.alpha_bar = pppa_condition<Scalar>(cfg.preconditioner, cfg.relaxation, cfg.obliqueness).alpha_bar;
  }
  const Scalar stop = cfg.tol * cfg.tol;

  for (int k = 0; k < cfg.max_iter; ++k) {
    TraceRow<Scalar> row;
    row.k = k;
    Scalar size = z.norm();
    if (solution) {
      const Vector<Scalar> e = z - *solution;
      row.lyapunov = e.dot(m_lambda_inv * e);
      size = row.lyapunov;
    }
    if (!std::isfinite(size) || size > Scalar(kDivergenceThreshold)) {
      trace.status = RunStatus::Diverged;
      break;
    }
    Vector<Scalar> zbar;
    try {
      zbar = prox(z);
    } catch (const Error& e) {
      trace.status = RunStatus::Error;
      trace.message = e.what();
      break;
    }
    const Vector<Scalar> diff = z - zbar;
    row.res = diff.dot(m_lambda * diff);
    const auto d = halfspace_diagnostics(cfg.preconditioner, cfg.relaxation, v, z, zbar,
                                         solution ? &*solution : nullptr);
    row.alpha = d.alpha;
    row.gap = d.gap;
    Vector<Scalar> next = z + cfg.relaxation * (zbar - z);
    row.x = std::move(z);
    row.xbar = std::move(zbar);
    trace.rows.push_back(std::move(row));
    z = std::move(next);
    if (!std::isfinite(trace.rows.back().res)) {
      trace.status = RunStatus::Diverged;
      break;
    }
    if (trace.rows.back().res <= stop) {
      trace.status = RunStatus::Converged;
      break;
    }
  }
  trace.final_x = std::move(z);
  return trace;
}

}  // namespace detail

/// Relaxed preconditioned proximal point on an explicit z-space operator T.
template <typename Scalar>
IterateTrace<Scalar> run_pppa(const Operator<Scalar>& t, const PppaConfig<Scalar>& cfg, Vector<Scalar> z0,
                              const std::optional<Vector<Scalar>>& solution = std::nullopt,
                              const ResolventOptions& ropts = {}) {
  cfg.validate();
  require_dim(z0.size(), t.dim(), "run_pppa z0");
  return detail::drive_zspace(cfg, std::move(z0), solution, [&](const Vector<Scalar>& z) {
    const Vector<Scalar> mz = cfg.preconditioner * z;
    const Scalar tol = ropts.tol ? static_cast<Scalar>(*ropts.tol) : Scalar(1e-10) * (Scalar(1) + mz.norm());
    return detail::solve_linear_plus_operator<Scalar>(t, cfg.preconditioner, Scalar(1), mz, z, tol,
                                                      ropts.max_newton, "run_pppa")
        .point;
  });
}

/// The same z-space iteration on T = S^X without materializing S^X: the
/// proximal point comes from the resolvent of S,
///   q = J_{S/gamma}(P_X z + P_Xperp z / gamma),  zbar = P_X q + P_Xperp z - gamma P_Xperp q.
/// Works for nonlinear S. Uses the structured M and Lambda of `cfg`.
template <typename Scalar>
IterateTrace<Scalar> run_pppa_linkage(const Operator<Scalar>& op, const Subspace<Scalar>& s,
                                      const SolverConfig<Scalar>& cfg, Vector<Scalar> z0,
                                      const std::optional<GraphPoint<Scalar>>& known_solution = std::nullopt,
                                      std::optional<Moduli<Scalar>> moduli = std::nullopt,
                                      const ResolventOptions& ropts = {}) {
  cfg.validate();
  require_dim(op.dim(), s.ambient_dim(), "run_pppa_linkage operator");
  require_dim(z0.size(), s.ambient_dim(), "run_pppa_linkage z0");
  const PppaConfig<Scalar> pcfg = PppaConfig<Scalar>::structured(s, cfg, moduli);
  std::optional<Vector<Scalar>> z_star;
  if (known_solution) z_star = known_solution->primal + known_solution->dual;
  return detail::drive_zspace(pcfg, std::move(z0), z_star, [&](const Vector<Scalar>& z) {
    const Vector<Scalar> zc = s.project_complement(z);
    const Vector<Scalar> q = resolvent(op, cfg.gamma, (s.project(z) + zc / cfg.gamma).eval(), ropts).point;
    return Vector<Scalar>(s.project(q) + zc - cfg.gamma * s.project_complement(q));
  });
}

// ---------------------------------------------------------------------------
// Linear analysis
// ---------------------------------------------------------------------------

/// The affine iteration map z -> H z + h of the decoupling iteration for
/// affine S, written through the partial inverse:
///   H = I + Lambda((M + S^X)^{-1} M - I).
template <typename Scalar>
Matrix<Scalar> linear_iteration_matrix(const Operator<Scalar>& op, const Subspace<Scalar>& s,
                                       const SolverConfig<Scalar>& cfg) {
  const Eigen::Index n = s.ambient_dim();
  const Matrix<Scalar> k = partial_inverse_matrix(op.affine_parts().matrix, s);
  const auto st = structured_pppa(s, cfg);
  const Matrix<Scalar> lhs = st.preconditioner + k;
  Eigen::PartialPivLU<Matrix<Scalar>> lu(lhs);
  if (is_numerically_singular(lhs, lu)) throw SingularResolvent("linear_iteration_matrix: M + S^X is singular");
  const Matrix<Scalar> id = Matrix<Scalar>::Identity(n, n);
  return id + st.relaxation * (lu.solve(st.preconditioner) - id);
}

/// Spectral radius of the iteration matrix; the iteration converges from
/// every start iff this is < 1.
template <typename Scalar>
Scalar spectral_radius_linear(const Operator<Scalar>& op, const Subspace<Scalar>& s,
                              const SolverConfig<Scalar>& cfg) {
  return spectral_radius(linear_iteration_matrix(op, s, cfg));
}

}  // namespace progdec
