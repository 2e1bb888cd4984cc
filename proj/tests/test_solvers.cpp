#include "progdec/problems.hpp"
#include "progdec/solvers.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace progdec;
using testing::max_abs;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

SolverConfigXd config(double gamma, double lx, double ly, int max_iter = 10000, double tol = 1e-9) {
  SolverConfigXd c;
  c.gamma = gamma;
  c.lambda_x = lx;
  c.lambda_y = ly;
  c.max_iter = max_iter;
  c.tol = tol;
  return c;
}

SolverConfigXd reference_config() { return config(10.0 / 9.0, 0.8, 9.0 / 50.0, 2000); }

double closed_form_radius(double a, double lambda) {
  return std::sqrt(1 - lambda * (2 * (1 + a + a * a) - lambda * (1 + a * a)) / ((1 + a) * (1 + a) + 1));
}

RunOptions<double> with_solution(const LinkageProblem<double>& p, bool moduli = true) {
  RunOptions<double> o;
  o.known_solution = p.known_solutions.front();
  if (moduli) o.moduli = p.moduli();
  return o;
}

}  // namespace

TEST_CASE("progdec_step examples") {
  const auto t = tightness_problem(1.0);
  const SolverConfigXd cfg = config(1, 1, 1);
  const auto [next, rec] = progdec_step(t.op, t.subspace, cfg, {vec({1, 0}), vec({0, 1}), 0});
  CHECK((rec.q - vec({0.2, 0.4})).norm() <= 1e-14);
  CHECK((next.x - vec({0.2, 0})).norm() <= 1e-14);
  CHECK((next.y - vec({0, 0.6})).norm() <= 1e-14);
  CHECK(next.k == 1);

  const auto lin = linear_system_problem();
  const auto& sol = lin.known_solutions.front();
  const auto [fx, frec] = progdec_step(lin.op, lin.subspace, reference_config(), {sol.primal, sol.dual, 0});
  CHECK((frec.q - sol.primal).norm() <= 1e-12);
  CHECK((fx.x - sol.primal).norm() <= 1e-12);
  CHECK((fx.y - sol.dual).norm() <= 1e-12);
  CHECK(frec.res <= 1e-24);

  const IterateState<double> st{vec({3, 0}), vec({0, -2}), 4};
  const auto [same, r0] = progdec_step(t.op, t.subspace, config(0.7, 0, 0), st);
  CHECK((same.x - st.x).norm() == 0.0);
  CHECK((same.y - st.y).norm() == 0.0);
  CHECK(r0.res == 0.0);

  CHECK_THROWS_AS(progdec_step(t.op, t.subspace, cfg, {vec({1, 0, 0}), vec({0, 1}), 0}), DimensionMismatch);
}

TEST_CASE("pppa_step examples") {
  PppaConfig<double> cfg;
  cfg.preconditioner = MatrixXd::Identity(2, 2);
  cfg.relaxation = MatrixXd::Identity(2, 2);
  const auto t = OperatorXd::linear((MatrixXd(2, 2) << 1, 1, -1, 1).finished());

  const auto st = pppa_step(t, cfg, vec({1, 1}));
  CHECK((st.zbar - vec({0.2, 0.6})).norm() <= 1e-14);
  CHECK((st.next - st.zbar).norm() <= 1e-14);

  const auto fixed = pppa_step(t, cfg, VectorXd(VectorXd::Zero(2)));
  CHECK(fixed.zbar.norm() == 0.0);
  CHECK(fixed.next.norm() == 0.0);

  cfg.obliqueness = MatrixXd(0.5 * MatrixXd::Identity(2, 2));
  const VectorXd origin = VectorXd::Zero(2);
  const auto d = pppa_step(t, cfg, vec({1, 1}), &origin).diagnostics;
  CHECK(d.alpha == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(d.alpha_bar == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(std::abs(d.gap) <= 1e-14);

  // singular M + T
  const auto neg = OperatorXd::linear(-MatrixXd::Identity(2, 2));
  cfg.obliqueness.reset();
  CHECK_THROWS_AS(pppa_step(neg, cfg, vec({1, 1})), SingularResolvent);
}

TEST_CASE("linear system converges with the admissible configuration") {
  const auto lin = linear_system_problem();
  const auto& sol = lin.known_solutions.front();
  const auto tr = run_progdec(lin.op, lin.subspace, reference_config(), vec({-2, -2, -2, -2}), vec({1, 1, -1, -1}),
                              with_solution(lin));
  REQUIRE(tr.status == RunStatus::Converged);
  CHECK(tr.size() <= 2000);
  CHECK(tr.warnings.empty());
  CHECK((tr.final_x - sol.primal).norm() <= 1e-7);
  CHECK((tr.final_y - sol.dual).norm() <= 1e-7);
  CHECK(linkage_residual<double>(lin.op, lin.subspace, {tr.final_x, tr.final_y}) <= 1e-8);
  CHECK(tr.alpha_bar == doctest::Approx(5.0 / 9.0).epsilon(1e-12));
  for (std::size_t k = 1; k < tr.size(); ++k) {
    CHECK(tr.rows[k].lyapunov <= tr.rows[k - 1].lyapunov + 1e-10);
    CHECK(tr.rows[k].res <= tr.rows[k - 1].res * (1 + 1e-9) + 1e-30);
  }
}

TEST_CASE("spingarn configuration does not converge on the linear system") {
  const auto lin = linear_system_problem();
  const auto tr = run_progdec(lin.op, lin.subspace, config(1, 1, 1, 500), vec({-2, -2, -2, -2}),
                              vec({1, 1, -1, -1}), with_solution(lin, false));
  CHECK(tr.status != RunStatus::Converged);
  double lowest = INFINITY;
  for (const auto& r : tr.rows) lowest = std::min(lowest, r.res);
  CHECK(lowest >= 1e-3);
}

TEST_CASE("tightness contraction factor") {
  const auto t = tightness_problem(1.0);
  const auto tr = run_progdec(t.op, t.subspace, config(1, 1, 1), vec({1, 0}), vec({0, 1}));
  REQUIRE(tr.status == RunStatus::Converged);
  const std::size_t k0 = 4, k1 = tr.size() - 1;
  REQUIRE(k1 > k0 + 10);
  const auto norm_z = [&](std::size_t k) { return (tr.rows[k].x + tr.rows[k].y).norm(); };
  const double factor = std::pow(norm_z(k1) / norm_z(k0), 1.0 / static_cast<double>(k1 - k0));
  CHECK(factor == doctest::Approx(1 / std::sqrt(5.0)).epsilon(1e-2));
}

TEST_CASE("relaxed DRS equals the decoupling iteration") {
  for (const auto& p : {tightness_problem(1.0), tightness_problem(-0.5), linear_system_problem()}) {
    const Eigen::Index n = p.subspace.ambient_dim();
    testing::Rng rng;
    const VectorXd x0 = p.subspace.project(rng.vector(n));
    const VectorXd y0 = p.subspace.project_complement(rng.vector(n));
    for (const auto& [gamma, lambda] : {std::pair{1.0, 0.5}, std::pair{1.5, 1.0}, std::pair{10.0 / 9.0, 0.3}}) {
      const auto ref = run_progdec(p.op, p.subspace, config(gamma, lambda, lambda, 300), x0, y0);
      const auto drs = run_drs(p.op, p.subspace, gamma, lambda, VectorXd(x0 - y0 / gamma), 300);
      REQUIRE(drs.mapped.size() == ref.size());
      REQUIRE(drs.shadow.size() == ref.size());
      CHECK(drs.mapped.status == ref.status);
      for (std::size_t k = 0; k < ref.size(); ++k) {
        const auto& a = ref.rows[k];
        const auto& b = drs.mapped.rows[k];
        CHECK((a.x - b.x).norm() <= 1e-10);
        CHECK((a.y - b.y).norm() <= 1e-10);
        CHECK((a.xbar - b.xbar).norm() <= 1e-10);
        CHECK((a.ybar - b.ybar).norm() <= 1e-10);
        CHECK((drs.shadow[k] - (a.x - a.y / gamma)).norm() <= 1e-10);
      }
    }
  }
}

TEST_CASE("relaxed DRS on a monotone problem and past the tight boundary") {
  testing::Rng rng;
  const MatrixXd b = rng.matrix(4, 4);
  const MatrixXd m = b * b.transpose() + MatrixXd::Identity(4, 4);
  const auto op = OperatorXd::affine(m, rng.vector(4));
  const auto s = SubspaceXd::from_columns(rng.matrix(4, 2));
  const auto mono = run_drs(op, s, 1.0, 1.0, s.project(rng.vector(4)));
  CHECK(mono.mapped.status == RunStatus::Converged);
  CHECK(linkage_residual<double>(op, s, {mono.mapped.final_x, mono.mapped.final_y}) <= 1e-7);

  const auto t = tightness_problem(1.0);
  const auto div = run_drs(t.op, t.subspace, 1.0, 3.2, vec({1, -1}), 100000);
  CHECK(div.mapped.status == RunStatus::Diverged);
}

TEST_CASE("three solvers agree on affine problems") {
  for (const auto& p : {tightness_problem(1.0), tightness_problem(2.0), linear_system_problem()}) {
    const Eigen::Index n = p.subspace.ambient_dim();
    testing::Rng rng(7);
    const VectorXd x0 = p.subspace.project(rng.vector(n));
    const VectorXd y0 = p.subspace.project_complement(rng.vector(n));
    const double gamma = p.label == "linear-system" ? 10.0 / 9.0 : 1.0;
    const auto cfg = config(gamma, 0.6, 0.6, 200, 1e-30);
    const auto ref = run_progdec(p.op, p.subspace, cfg, x0, y0);
    const auto drs = run_drs(p.op, p.subspace, gamma, 0.6, VectorXd(x0 - y0 / gamma), 200, 1e-30);

    const auto k = partial_inverse(p.op, p.subspace);
    const auto explicit_pppa = run_pppa(k, PppaConfig<double>::structured(p.subspace, cfg), VectorXd(x0 + y0));
    const auto implicit_pppa = run_pppa_linkage(p.op, p.subspace, cfg, VectorXd(x0 + y0));

    REQUIRE(ref.size() > 20);
    const std::size_t rows = std::min({ref.size(), drs.mapped.size(), explicit_pppa.size(), implicit_pppa.size()});
    CHECK(rows >= ref.size() - 1);
    for (std::size_t i = 0; i < rows; ++i) {
      const auto& r = ref.rows[i];
      CHECK((r.x + r.y - explicit_pppa.rows[i].x).norm() <= 1e-9);
      CHECK((r.xbar + r.ybar - explicit_pppa.rows[i].xbar).norm() <= 1e-9);
      CHECK((r.x + r.y - implicit_pppa.rows[i].x).norm() <= 1e-9);
      CHECK((r.xbar + r.ybar - implicit_pppa.rows[i].xbar).norm() <= 1e-9);
      CHECK((r.x - drs.mapped.rows[i].x).norm() <= 1e-9);
      CHECK((r.y - drs.mapped.rows[i].y).norm() <= 1e-9);
      CHECK(std::abs(r.res - implicit_pppa.rows[i].res) <= 1e-9 * (1 + r.res));
    }
  }
}

TEST_CASE("classical proximal point on a monotone affine operator") {
  testing::Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = rng.integer(1, 5);
    const MatrixXd b = rng.matrix(n, n);
    const MatrixXd skew = rng.matrix(n, n);
    const MatrixXd m = b * b.transpose() + 0.1 * MatrixXd::Identity(n, n) + (skew - skew.transpose());
    const auto t = OperatorXd::affine(m, rng.vector(n));
    PppaConfig<double> cfg;
    cfg.preconditioner = MatrixXd::Identity(n, n);
    cfg.relaxation = MatrixXd::Identity(n, n);
    cfg.max_iter = 100000;
    const auto tr = run_pppa(t, cfg, rng.vector(n));
    CHECK(tr.status == RunStatus::Converged);
    CHECK(t(tr.final_x).norm() <= 1e-6);
  }
}

TEST_CASE("rate bound and row-wise descent") {
  struct Case {
    LinkageProblem<double> p;
    SolverConfigXd cfg;
    VectorXd x0, y0;
    double alpha_bar;
  };
  const std::vector<Case> cases = {
      {tightness_problem(1.0), config(1, 1, 1), vec({1, 0}), vec({0, 1}), 1.5},
      {linear_system_problem(), reference_config(), vec({-2, -2, -2, -2}), vec({1, 1, -1, -1}), 5.0 / 9.0},
  };
  for (const auto& c : cases) {
    const auto tr = run_progdec(c.p.op, c.p.subspace, c.cfg, c.x0, c.y0, with_solution(c.p));
    REQUIRE(tr.status == RunStatus::Converged);
    CHECK(tr.alpha_bar == doctest::Approx(c.alpha_bar).epsilon(1e-12));
    const auto st = structured_pppa(c.p.subspace, c.cfg, c.p.moduli()->mu, c.p.moduli()->rho);
    CHECK(pppa_condition<double>(st.preconditioner, st.relaxation, st.obliqueness).alpha_bar ==
          doctest::Approx(c.alpha_bar).epsilon(1e-12));
    const double l0 = tr.rows.front().lyapunov;
    const double factor = 2 * c.alpha_bar - 1;
    double lowest = INFINITY;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      lowest = std::min(lowest, tr.rows[k].res);
      const double bound = l0 / (static_cast<double>(k + 1) * factor);
      CHECK(lowest <= bound * (1 + 1e-8));
      CHECK(tr.rows[k].alpha >= c.alpha_bar - 1e-9);
      CHECK(tr.rows[k].gap >= -1e-9 * (1 + l0));
      if (k + 1 < tr.size()) {
        CHECK(tr.rows[k + 1].lyapunov <= tr.rows[k].lyapunov - factor * tr.rows[k].res + 1e-10 * (1 + l0));
      }
    }
  }
}

TEST_CASE("spectral radius examples") {
  const auto t = tightness_problem(1.0);
  CHECK(spectral_radius_linear(t.op, t.subspace, config(1, 1, 1)) == doctest::Approx(1 / std::sqrt(5.0)).epsilon(1e-12));
  CHECK(spectral_radius_linear(t.op, t.subspace, config(1, 3, 3)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(spectral_radius_linear(t.op, t.subspace, config(1, 0, 0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(max_abs(linear_iteration_matrix(t.op, t.subspace, config(1, 0, 0)) - MatrixXd::Identity(2, 2)) <= 1e-15);

  const auto lin = linear_system_problem();
  CHECK(spectral_radius_linear(lin.op, lin.subspace, reference_config()) < 1.0);
  CHECK(spectral_radius_linear(lin.op, lin.subspace, config(1, 1, 1)) >= 1.0 - 1e-12);
}

TEST_CASE("spectral radius decides convergence on the tightness family") {
  for (double a : {0.5, 1.0, 2.0}) {
    const auto t = tightness_problem(a);
    int compared = 0;
    for (int i = 0; i < 21; ++i) {
      const double lambda = 0.2 * (i + 1);
      auto cfg = config(1, lambda, lambda, 200000);
      cfg.record_diagnostics = false;
      const double rho = spectral_radius_linear(t.op, t.subspace, cfg);
      CHECK(rho == doctest::Approx(closed_form_radius(a, lambda)).epsilon(1e-12));
      if (std::abs(rho - 1) < 1e-3) continue;
      const auto tr = run_progdec(t.op, t.subspace, cfg, vec({1, 0}), vec({0, 1}));
      CHECK((tr.status == RunStatus::Converged) == (rho < 1));
      if (rho > 1) CHECK(tr.status == RunStatus::Diverged);
      ++compared;
    }
    CHECK(compared >= 19);
  }
}

TEST_CASE("iterates stay in their subspaces") {
  testing::Rng rng;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = rng.integer(2, 6);
    const auto s = SubspaceXd::from_columns(rng.matrix(n, rng.integer(1, n - 1)));
    const MatrixXd b = rng.matrix(n, n);
    const MatrixXd skew = rng.matrix(n, n);
    const auto op = OperatorXd::affine(MatrixXd(b * b.transpose() + skew - skew.transpose()), rng.vector(n));
    auto cfg = config(rng.uniform(0.2, 3.0), rng.uniform(0.1, 1.9), rng.uniform(0.1, 1.9), 50);
    cfg.record_diagnostics = false;
    const auto tr = run_progdec(op, s, cfg, s.project(rng.vector(n)), s.project_complement(rng.vector(n)));
    CHECK(tr.warnings.empty());
    double worst = 0;
    for (const auto& r : tr.rows) {
      worst = std::max(worst, s.project_complement(r.x).norm() + s.project(r.y).norm());
    }
    worst = std::max(worst, s.project_complement(tr.final_x).norm() + s.project(tr.final_y).norm());
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("infeasible start is projected with a warning") {
  const auto t = tightness_problem(1.0);
  const auto tr = run_progdec(t.op, t.subspace, config(1, 1, 1, 3), vec({1, 0.5}), vec({0.25, 1}));
  REQUIRE(tr.warnings.size() == 1);
  CHECK(tr.warnings.front().find("projected") != std::string::npos);
  CHECK((tr.rows.front().x - vec({1, 0})).norm() == 0.0);
  CHECK((tr.rows.front().y - vec({0, 1})).norm() == 0.0);
}

TEST_CASE("resolvent failure stops the run with a partial trace") {
  auto calls = std::make_shared<int>(0);
  const auto op = OperatorXd::mapping(
      2,
      [calls](const VectorXd& x) {
        if (++*calls > 40) throw SingularResolvent("operator unavailable");
        return VectorXd(x + x.array().cube().matrix());
      },
      [](const VectorXd& x) { return MatrixXd(MatrixXd::Identity(2, 2) + MatrixXd(3 * x.array().square().matrix().asDiagonal())); });
  const auto s = SubspaceXd::from_basis({vec({1, 1})});
  const auto tr = run_progdec(op, s, config(1, 1, 1), vec({1, 1}), vec({1, -1}));
  CHECK(tr.status == RunStatus::Error);
  CHECK(tr.message.find("operator unavailable") != std::string::npos);
  CHECK(!tr.empty());
  CHECK(tr.final_x.size() == 2);
}

TEST_CASE("run errors and degenerate budgets") {
  const auto t = tightness_problem(1.0);
  CHECK_THROWS_AS(run_progdec(t.op, t.subspace, config(0, 1, 1), vec({1, 0}), vec({0, 1})), InvalidArgument);
  CHECK_THROWS_AS(run_progdec(t.op, t.subspace, config(1, 1, 1), vec({1, 0, 0}), vec({0, 1})), DimensionMismatch);
  const auto none = run_progdec(t.op, t.subspace, config(1, 1, 1, 0), vec({1, 0}), vec({0, 1}));
  CHECK(none.empty());
  CHECK(none.status == RunStatus::MaxIter);
  CHECK((none.final_x - vec({1, 0})).norm() == 0.0);

  PppaConfig<double> bad;
  bad.preconditioner = MatrixXd::Identity(2, 2);
  bad.relaxation = (MatrixXd(2, 2) << 1, 0.5, 0.5, 1).finished();
  bad.preconditioner(0, 0) = 2;
  CHECK_THROWS_AS(bad.validate(), NonCommuting);
  bad.relaxation = -MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(bad.validate(), NotSPD);
}

TEST_CASE("region monitor flags without stopping") {
  const auto d = double_well_problem();
  RunOptions<double> opts;
  opts.known_solution = d.known_solutions.front();
  opts.moduli = d.moduli();
  opts.region = d.region_predicate();
  REQUIRE(opts.region);

  const auto inside = run_progdec(d.op, d.subspace, config(1, 1, 1), vec({0.5, 0.5}), vec({0, 0}), opts);
  CHECK(inside.status == RunStatus::Converged);
  CHECK(!inside.left_region);
  CHECK(inside.final_x.norm() <= 1e-8);

  // first proximal point lands outside the radius-2 ball
  const auto outside = run_progdec(d.op, d.subspace, config(1, 1, 1, 5), vec({2.2, 2.2}), vec({2, -2}), opts);
  CAPTURE(outside.message);
  REQUIRE(!outside.empty());
  CHECK(outside.left_region);
  CHECK(outside.rows.front().left_region);
  CHECK(outside.size() == 5);
}

TEST_CASE("rosenbrock converges locally with a planned stepsize") {
  const auto r = rosenbrock_problem(1.0);
  const auto plan = stepsize_plan(r.moduli()->mu, r.moduli()->rho);
  const double gamma = 3.0;
  CHECK(gamma > plan.gamma_lo);
  CHECK(gamma < plan.gamma_hi);
  RunOptions<double> opts;
  opts.known_solution = r.known_solutions.front();
  opts.moduli = r.moduli();
  const auto tr = run_progdec(r.op, r.subspace, config(gamma, 0.4, 0.4), vec({0.05, 0.05, 0.02}), vec({0, 0, 0}), opts);
  CHECK(tr.status == RunStatus::Converged);
  CHECK(tr.final_x.norm() <= 1e-7);
}
