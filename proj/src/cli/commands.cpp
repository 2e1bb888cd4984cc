#include "commands.hpp"

#include "progdec/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <thread>

namespace progdec::cli {

namespace {

constexpr double kCompareTolerance = 1e-8;

VectorXd fill(Eigen::Index n, std::initializer_list<double> v) {
  VectorXd out(n);
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

nlohmann::json num(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("progdec");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("PROGDEC_LOG")) {
    const std::string lvl(env);
    if (lvl == "error") spdlog::set_level(spdlog::level::err);
    else if (lvl == "warn") spdlog::set_level(spdlog::level::warn);
    else if (lvl == "info") spdlog::set_level(spdlog::level::info);
    else if (lvl == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::warn("PROGDEC_LOG='{}' not recognized (error|warn|info|debug)", lvl);
  }
}

IterateTraceXd run_pppa_for(const LinkageProblem<double>& p, const SolverConfig<double>& cfg, const StartPoint& st) {
  const auto& s = p.subspace;
  const VectorXd z0 = s.project(st.x0) + s.project_complement(st.y0);
  std::optional<GraphPointXd> sol;
  if (!p.known_solutions.empty()) sol = p.known_solutions.front();
  if (p.op.is_affine()) {
    const auto t = partial_inverse(p.op, s);
    const auto pcfg = PppaConfig<double>::structured(s, cfg, p.moduli());
    std::optional<VectorXd> z_star;
    if (sol) z_star = VectorXd(sol->primal + sol->dual);
    return run_pppa(t, pcfg, z0, z_star);
  }
  return run_pppa_linkage(p.op, s, cfg, z0, sol, p.moduli());
}

RunOptions<double> run_options(const LinkageProblem<double>& p) {
  RunOptions<double> opts;
  if (!p.known_solutions.empty()) opts.known_solution = p.known_solutions.front();
  opts.moduli = p.moduli();
  opts.region = p.region_predicate();
  return opts;
}

double max_abs_diff(const VectorXd& a, const VectorXd& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

// ---------------------------------------------------------------------------
// Problems and runs
// ---------------------------------------------------------------------------

LinkageProblem<double> load_problem(const ProblemSpec& spec) {
  const bool files = !spec.matrix_file.empty() || !spec.subspace_file.empty();
  if (files && !spec.name.empty()) throw InvalidArgument("give either --problem or --matrix/--subspace, not both");
  if (spec.name == "tightness") return tightness_problem<double>(spec.a);
  if (spec.name == "linear-system") return linear_system_problem<double>();
  if (spec.name == "rosenbrock") return rosenbrock_problem<double>(spec.b);
  if (spec.name == "double-well") return double_well_problem<double>();
  if (!spec.name.empty()) throw InvalidArgument("unknown problem '" + spec.name + "'");
  if (spec.matrix_file.empty() || spec.subspace_file.empty()) {
    throw InvalidArgument("a problem needs --problem, or both --matrix and --subspace");
  }
  const MatrixXd m = io::read_matrix(spec.matrix_file);
  if (m.rows() != m.cols()) throw DimensionMismatch(spec.matrix_file + ": matrix must be square");
  const VectorXd offset = spec.offset_file.empty() ? VectorXd::Zero(m.rows()) : io::read_vector(spec.offset_file);
  require_dim(offset.size(), m.rows(), "offset");
  auto s = io::read_subspace(spec.subspace_file);
  require_dim(s.ambient_dim(), m.rows(), "subspace");
  LinkageProblem<double> p{OperatorXd::affine(m, offset), std::move(s), {}, {}, {}, {}, "file", {}};
  return p;
}

StartPoint default_start(const LinkageProblem<double>& p) {
  const Eigen::Index n = p.subspace.ambient_dim();
  if (p.label == "linear-system") return {fill(4, {-2, -2, -2, -2}), fill(4, {1, 1, -1, -1})};
  if (p.label == "tightness") return {fill(2, {1, 0}), fill(2, {0, 1})};
  if (p.label == "rosenbrock") return {fill(3, {0.1, 0.1, 0.1}), VectorXd::Zero(3)};
  if (p.label == "double-well") return {fill(2, {0.5, 0.5}), VectorXd::Zero(2)};
  return {p.subspace.project(VectorXd::Ones(n)), VectorXd::Zero(n)};
}

SolverKind parse_solver(const std::string& name) {
  if (name == "progdec") return SolverKind::ProgDec;
  if (name == "pppa") return SolverKind::Pppa;
  if (name == "drs") return SolverKind::Drs;
  if (name == "spingarn") return SolverKind::Spingarn;
  if (name == "progdec-classic") return SolverKind::ProgDecClassic;
  throw InvalidArgument("unknown solver '" + name + "'");
}

int exit_code(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return 0;
    case RunStatus::MaxIter: return 2;
    case RunStatus::Diverged: return 3;
    case RunStatus::Error: return 1;
  }
  return 1;
}

double final_linkage_residual(const LinkageProblem<double>& p, const IterateTraceXd& t) {
  const auto& s = p.subspace;
  if (t.final_x.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  if (t.space == TraceSpace::ZSpace) {
    return linkage_residual<double>(p.op, s, {s.project(t.final_x), s.project_complement(t.final_x)});
  }
  return linkage_residual<double>(p.op, s, {t.final_x, t.final_y});
}

IterateTraceXd solve(const LinkageProblem<double>& p, const SolveRequest& req) {
  const auto& s = p.subspace;
  SolverConfig<double> cfg = req.cfg;
  const auto opts = run_options(p);
  auto keep_controls = [&](SolverConfig<double> c) {
    c.max_iter = req.cfg.max_iter;
    c.tol = req.cfg.tol;
    c.record_diagnostics = req.cfg.record_diagnostics;
    return c;
  };
  switch (req.solver) {
    case SolverKind::ProgDec:
      return run_progdec(p.op, s, cfg, req.start.x0, req.start.y0, opts);
    case SolverKind::Spingarn: {
      const auto m = p.moduli();
      if (m && !(m->mu > -0.5 && m->rho > -0.5)) {
        spdlog::warn("spingarn: moduli ({}, {}) outside mu, rho > -1/2; no convergence guarantee", m->mu, m->rho);
      }
      cfg = keep_controls(presets::spingarn<double>());
      return run_progdec(p.op, s, cfg, req.start.x0, req.start.y0, opts);
    }
    case SolverKind::ProgDecClassic: {
      std::optional<double> mu = req.mu;
      if (!mu && p.moduli()) mu = p.moduli()->mu;
      if (!mu) throw InvalidArgument("progdec-classic needs --mu (the problem carries no moduli)");
      cfg = keep_controls(presets::progdec_classic<double>(req.cfg.gamma, *mu));
      spdlog::info("progdec-classic: gamma={} lambda_x={} lambda_y={}", cfg.gamma, cfg.lambda_x, cfg.lambda_y);
      return run_progdec(p.op, s, cfg, req.start.x0, req.start.y0, opts);
    }
    case SolverKind::Drs: {
      const double lambda = req.lambda.value_or(cfg.lambda_x);
      const VectorXd s0 = s.project(req.start.x0) - s.project_complement(req.start.y0) / cfg.gamma;
      return run_drs(p.op, s, cfg.gamma, lambda, s0, cfg.max_iter, cfg.tol, opts).mapped;
    }
    case SolverKind::Pppa:
      return run_pppa_for(p, cfg, req.start);
  }
  throw InvalidArgument("unhandled solver");
}

std::vector<double> linspace(double from, double to, int points) {
  if (points < 2) throw InvalidArgument("sweep: points must be at least 2");
  std::vector<double> out(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) out[static_cast<std::size_t>(i)] = from + (to - from) * i / (points - 1);
  return out;
}

std::vector<SweepRow> sweep(const LinkageProblem<double>& p, const StartPoint& start,
                            const SolverConfig<double>& base, SweepParam param,
                            const std::vector<double>& grid, unsigned threads) {
  std::vector<SweepRow> rows(grid.size());
  const auto opts = run_options(p);
  auto job = [&](std::size_t i) {
    SolverConfig<double> cfg = base;
    cfg.record_diagnostics = false;
    if (param == SweepParam::Lambda) cfg.lambda_x = cfg.lambda_y = grid[i];
    else cfg.gamma = grid[i];
    SweepRow& row = rows[i];
    row.value = grid[i];
    try {
      const auto t = run_progdec(p.op, p.subspace, cfg, start.x0, start.y0, opts);
      row.status = t.status;
      row.iterations = static_cast<int>(t.rows.size());
      row.final_res = t.rows.empty() ? std::numeric_limits<double>::quiet_NaN() : t.rows.back().res;
    } catch (const Error& e) {
      spdlog::warn("sweep value {}: {}", grid[i], e.what());
      row.status = RunStatus::Error;
    }
    if (p.op.is_affine()) {
      try {
        row.spectral_radius = spectral_radius_linear(p.op, p.subspace, cfg);
      } catch (const Error&) {
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, grid.size())));
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) job(i);
      });
    }
  }
  return rows;
}

double CompareResult::max_deviation() const {
  return std::max(progdec_vs_pppa, progdec_vs_drs.value_or(0.0));
}

CompareResult compare(const LinkageProblem<double>& p, const StartPoint& start, const SolverConfig<double>& cfg,
                      bool include_drs) {
  const auto& s = p.subspace;
  const auto opts = run_options(p);
  const auto pd = run_progdec(p.op, s, cfg, start.x0, start.y0, opts);
  const auto pp = run_pppa_for(p, cfg, start);

  CompareResult out;
  std::size_t rows = std::min(pd.rows.size(), pp.rows.size());
  for (std::size_t k = 0; k < rows; ++k) {
    const auto& a = pd.rows[k];
    const auto& b = pp.rows[k];
    out.progdec_vs_pppa = std::max({out.progdec_vs_pppa, max_abs_diff(a.x + a.y, b.x),
                                    max_abs_diff(a.xbar + a.ybar, b.xbar)});
  }
  if (include_drs) {
    if (cfg.lambda_x != cfg.lambda_y) throw InvalidArgument("compare: DRS requires lambda_x = lambda_y");
    const VectorXd s0 = s.project(start.x0) - s.project_complement(start.y0) / cfg.gamma;
    const auto dr = run_drs(p.op, s, cfg.gamma, cfg.lambda_x, s0, cfg.max_iter, cfg.tol, opts).mapped;
    double dev = 0.0;
    const std::size_t common = std::min(pd.rows.size(), dr.rows.size());
    for (std::size_t k = 0; k < common; ++k) {
      const auto& a = pd.rows[k];
      const auto& b = dr.rows[k];
      dev = std::max({dev, max_abs_diff(a.x, b.x), max_abs_diff(a.y, b.y), max_abs_diff(a.xbar, b.xbar),
                      max_abs_diff(a.ybar, b.ybar)});
    }
    out.progdec_vs_drs = dev;
    rows = std::min(rows, common);
  }
  out.rows = static_cast<int>(rows);
  return out;
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

namespace {

struct ConfigFlags {
  double gamma = 1.0;
  double lambda_x = 1.0;
  double lambda_y = 1.0;
  std::optional<double> lambda;
  int max_iter = 10000;
  double tol = 1e-9;
  std::string x0, y0;

  SolverConfig<double> config() const {
    SolverConfig<double> c;
    c.gamma = gamma;
    c.lambda_x = lambda ? *lambda : lambda_x;
    c.lambda_y = lambda ? *lambda : lambda_y;
    c.max_iter = max_iter;
    c.tol = tol;
    c.validate();
    return c;
  }

  StartPoint start(const LinkageProblem<double>& p) const {
    StartPoint st = default_start(p);
    if (!x0.empty()) st.x0 = io::parse_vector(x0);
    if (!y0.empty()) st.y0 = io::parse_vector(y0);
    require_dim(st.x0.size(), p.subspace.ambient_dim(), "--x0");
    require_dim(st.y0.size(), p.subspace.ambient_dim(), "--y0");
    return st;
  }
};

void add_problem_options(CLI::App* cmd, ProblemSpec& spec) {
  cmd->add_option("--problem", spec.name, "tightness | linear-system | rosenbrock | double-well");
  cmd->add_option("--a", spec.a, "tightness parameter a (nonzero)");
  cmd->add_option("--b", spec.b, "rosenbrock parameter b (positive)");
  cmd->add_option("--matrix", spec.matrix_file, "CSV matrix M of S(x) = Mx - m");
  cmd->add_option("--offset", spec.offset_file, "CSV vector m (default 0)");
  cmd->add_option("--subspace", spec.subspace_file, "CSV, one spanning vector of X per row");
}

void add_config_options(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--gamma", f.gamma, "stepsize gamma");
  cmd->add_option("--lambda-x", f.lambda_x, "primal relaxation");
  cmd->add_option("--lambda-y", f.lambda_y, "dual relaxation");
  cmd->add_option("--lambda", f.lambda, "sets lambda_x = lambda_y");
  cmd->add_option("--max-iter", f.max_iter, "iteration cap");
  cmd->add_option("--tol", f.tol, "stop when res <= tol^2");
  cmd->add_option("--x0", f.x0, "start x0 as comma-separated values");
  cmd->add_option("--y0", f.y0, "start y0 as comma-separated values");
}

void write_trace(const IterateTraceXd& t, const std::string& path, const std::string& format,
                 const io::Metadata& meta) {
  auto emit = [&](std::ostream& out) {
    if (format == "json") io::write_trace_json(out, t, meta);
    else io::write_trace_csv(out, t, meta);
  };
  if (path == "-") {
    emit(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw io::ParseError("cannot write '" + path + "'");
  emit(out);
}

nlohmann::json plan_json(double mu, double rho, int grid) {
  const auto plan = try_stepsize_plan<double>(mu, rho);
  if (!plan) return "empty";
  nlohmann::json j{{"gamma_interval", {num(plan->gamma_lo), num(plan->gamma_hi)}}};
  auto samples = nlohmann::json::array();
  for (int i = 0; i < grid; ++i) {
    const double g = std::isfinite(plan->gamma_hi)
                         ? plan->gamma_lo + (plan->gamma_hi - plan->gamma_lo) * (i + 1) / (grid + 1)
                         : plan->gamma_lo + 0.5 * (i + 1) * std::max(1.0, plan->gamma_lo);
    samples.push_back({{"gamma", g}, {"lambda_x_sup", plan->lambda_x_sup(g)}, {"lambda_y_sup", plan->lambda_y_sup(g)}});
  }
  j["lambda_bounds"] = std::move(samples);
  return j;
}

void print_text(const nlohmann::json& j, const std::string& indent = "") {
  std::size_t width = 0;
  for (auto it = j.begin(); it != j.end(); ++it) width = std::max(width, it.key().size());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it->is_object()) {
      std::cout << indent << it.key() << ":\n";
      print_text(*it, indent + "  ");
    } else if (it->is_string()) {
      std::cout << indent << std::left << std::setw(static_cast<int>(width)) << it.key() << ": "
                << it->get<std::string>() << '\n';
    } else {
      std::cout << indent << std::left << std::setw(static_cast<int>(width)) << it.key() << ": " << it->dump()
                << '\n';
    }
  }
}

void emit_report(const nlohmann::json& j, const std::string& format) {
  if (format == "text") print_text(j);
  else std::cout << j.dump(2) << '\n';
}

}  // namespace

int run(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Solvers, certificates and stepsize plans for linkage problems"};
  app.set_config("--config", "", "key = value file; command-line flags take precedence");
  app.require_subcommand(1);

  // solve
  ProblemSpec solve_spec;
  ConfigFlags solve_flags;
  std::string solver_name = "progdec", output, format = "csv";
  std::optional<double> classic_mu;
  bool no_diag = false;
  auto* solve_cmd = app.add_subcommand("solve", "run a solver and write its trace");
  add_problem_options(solve_cmd, solve_spec);
  add_config_options(solve_cmd, solve_flags);
  solve_cmd->add_option("--solver", solver_name, "progdec | pppa | drs | spingarn | progdec-classic");
  solve_cmd->add_option("--mu", classic_mu, "mu for progdec-classic (default: problem moduli)");
  solve_cmd->add_option("--output,-o", output, "trace file ('-' for stdout)");
  solve_cmd->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  solve_cmd->add_flag("--no-diagnostics", no_diag, "skip halfspace diagnostics");

  // certify
  ProblemSpec cert_spec;
  std::optional<double> cert_mu, cert_rho, mu_on_x;
  bool cert_auto = false;
  std::string cert_format = "json";
  int gamma_grid = 5, samples = 10000;
  std::uint64_t seed = 20240607;
  std::optional<double> box, ball;
  auto* cert_cmd = app.add_subcommand("certify", "check (mu P_Xperp, rho P_X)-semimonotonicity");
  add_problem_options(cert_cmd, cert_spec);
  cert_cmd->add_option("--mu", cert_mu, "mu (X^perp modulus)");
  cert_cmd->add_option("--rho", cert_rho, "rho (X modulus)");
  cert_cmd->add_flag("--auto", cert_auto, "derive mu from the elicitation bound (needs --mu-on-X)");
  cert_cmd->add_option("--mu-on-X", mu_on_x, "strong monotonicity modulus on X for --auto");
  cert_cmd->add_option("--format", cert_format, "json | text")->check(CLI::IsMember({"json", "text"}));
  cert_cmd->add_option("--gamma-grid", gamma_grid, "number of sampled gammas in the plan");
  cert_cmd->add_option("--samples", samples, "sample count for nonlinear operators");
  cert_cmd->add_option("--seed", seed, "sampling seed");
  cert_cmd->add_option("--box", box, "sample the box of this half-width around the anchor");
  cert_cmd->add_option("--ball", ball, "sample the ball of this radius around the anchor");

  // plan
  double plan_mu = 0, plan_rho = 0;
  std::optional<double> plan_gamma, plan_lx, plan_ly;
  auto* plan_cmd = app.add_subcommand("plan", "admissible stepsizes for given moduli");
  plan_cmd->add_option("--mu", plan_mu, "mu")->required();
  plan_cmd->add_option("--rho", plan_rho, "rho")->required();
  plan_cmd->add_option("--gamma", plan_gamma, "report suprema at this gamma");
  plan_cmd->add_option("--lambda-x", plan_lx, "check this lambda_x");
  plan_cmd->add_option("--lambda-y", plan_ly, "check this lambda_y");

  // sweep
  ProblemSpec sweep_spec;
  ConfigFlags sweep_flags;
  std::string param = "lambda", sweep_out = "-";
  double from = 0.1, to = 3.5;
  int points = 18;
  unsigned threads = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "run over a grid of lambda or gamma");
  add_problem_options(sweep_cmd, sweep_spec);
  add_config_options(sweep_cmd, sweep_flags);
  sweep_cmd->add_option("--param", param, "lambda | gamma")->check(CLI::IsMember({"lambda", "gamma"}));
  sweep_cmd->add_option("--from", from, "first grid value");
  sweep_cmd->add_option("--to", to, "last grid value");
  sweep_cmd->add_option("--points", points, "grid size (>= 2)");
  sweep_cmd->add_option("--threads", threads, "worker count (0 = hardware)");
  sweep_cmd->add_option("--output,-o", sweep_out, "table file ('-' for stdout)");

  // compare
  ProblemSpec cmp_spec;
  ConfigFlags cmp_flags;
  cmp_flags.max_iter = 200;
  cmp_flags.tol = 1e-30;
  bool no_drs = false;
  auto* cmp_cmd = app.add_subcommand("compare", "cross-check progdec, pppa and drs traces");
  add_problem_options(cmp_cmd, cmp_spec);
  add_config_options(cmp_cmd, cmp_flags);
  cmp_cmd->add_flag("--no-drs", no_drs, "exclude relaxed Douglas-Rachford");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*solve_cmd) {
      const auto p = load_problem(solve_spec);
      SolveRequest req;
      req.solver = parse_solver(solver_name);
      req.cfg = solve_flags.config();
      req.cfg.record_diagnostics = !no_diag;
      req.lambda = solve_flags.lambda;
      req.mu = classic_mu;
      req.start = solve_flags.start(p);
      const auto t = solve(p, req);
      for (const auto& w : t.warnings) spdlog::warn("{}", w);
      if (t.left_region) spdlog::warn("iterates left the validity region of the certificate");
      if (t.status == RunStatus::Error) spdlog::error("{}", t.message);
      const double lres = final_linkage_residual(p, t);
      if (!output.empty()) {
        write_trace(t, output, format,
                    {{"problem", p.label}, {"solver", solver_name}, {"linkage_residual", fmt(lres)}});
      }
      std::ostream& summary = output == "-" ? std::cerr : std::cout;
      summary << "status=" << to_string(t.status) << " iterations=" << t.rows.size()
              << " final_res=" << fmt(t.rows.empty() ? 0.0 : t.rows.back().res) << " linkage_residual=" << fmt(lres)
              << '\n';
      return exit_code(t.status);
    }

    if (*cert_cmd) {
      const auto p = load_problem(cert_spec);
      nlohmann::json rep{{"problem", p.label}};
      if (!cert_rho) throw InvalidArgument("certify needs --rho");
      double mu = 0;
      if (cert_auto) {
        if (!mu_on_x) throw InvalidArgument("--auto needs --mu-on-X");
        const auto e = elicitation_bound<double>(p.op.affine_parts().matrix, p.subspace, *mu_on_x, *cert_rho);
        rep["elicitation"] = {{"mu_in", *mu_on_x}, {"beta", e.beta}, {"sigma", e.sigma}, {"mu_out", e.mu_out}};
        mu = e.mu_out;
      } else {
        if (!cert_mu) throw InvalidArgument("certify needs --mu (or --auto)");
        mu = *cert_mu;
      }
      rep["mu"] = mu;
      rep["rho"] = *cert_rho;
      bool ok = false;
      if (p.op.is_affine()) {
        const auto c = check_semimonotone_linear<double>(p.op.affine_parts().matrix, p.subspace, mu, *cert_rho);
        rep["method"] = "linear";
        rep["margin"] = c.margin;
        rep["feasible"] = c.feasible;
        ok = c.feasible;
      } else {
        if (p.known_solutions.empty()) throw InvalidArgument("certify: nonlinear problem without an anchor");
        SamplingRegion<double> region = p.region.value_or(SamplingRegion<double>::ball(1.0));
        if (box) region = SamplingRegion<double>::box(*box);
        if (ball) region = SamplingRegion<double>::ball(*ball);
        const auto c = sampled_semimon_check<double>(p.op, p.subspace, p.known_solutions.front(), mu, *cert_rho,
                                                     region, samples, seed);
        rep["method"] = "sampled";
        rep["region"] = {{"shape", region.shape == SamplingRegion<double>::Shape::Box ? "box" : "ball"},
                         {"radius", region.radius}};
        rep["samples"] = samples;
        rep["seed"] = seed;
        rep["worst_violation"] = c.worst_violation;
        rep["feasible"] = c.holds;
        ok = c.holds;
      }
      rep["plan"] = plan_json(mu, *cert_rho, gamma_grid);
      emit_report(rep, cert_format);
      return ok ? 0 : 2;
    }

    if (*plan_cmd) {
      const auto plan = try_stepsize_plan<double>(plan_mu, plan_rho);
      std::cout << "mu: " << fmt(plan_mu) << "\nrho: " << fmt(plan_rho) << '\n';
      if (!plan) {
        std::cout << "plan: empty\n";
        return 2;
      }
      std::cout << "gamma: (" << fmt(plan->gamma_lo) << ", " << fmt(plan->gamma_hi) << ")\n";
      std::vector<double> gammas;
      if (plan_gamma) {
        gammas.push_back(*plan_gamma);
      } else {
        const auto j = plan_json(plan_mu, plan_rho, 5);
        for (const auto& s : j["lambda_bounds"]) gammas.push_back(s["gamma"].get<double>());
      }
      for (double g : gammas) {
        std::cout << "gamma=" << fmt(g) << (plan->gamma_admissible(g) ? "" : " (outside interval)")
                  << "  lambda_x < " << fmt(plan->lambda_x_sup(g)) << "  lambda_y < " << fmt(plan->lambda_y_sup(g))
                  << '\n';
      }
      if (plan_gamma && plan_lx && plan_ly) {
        const bool ok = plan->admissible(*plan_gamma, *plan_lx, *plan_ly);
        std::cout << "admissible: " << (ok ? "yes" : "no")
                  << "\nalpha_bar: " << fmt(plan->alpha_bar(*plan_gamma, *plan_lx, *plan_ly)) << '\n';
        return ok ? 0 : 2;
      }
      return 0;
    }

    if (*sweep_cmd) {
      const auto p = load_problem(sweep_spec);
      const auto grid = linspace(from, to, points);
      const auto rows = sweep(p, sweep_flags.start(p), sweep_flags.config(),
                              param == "gamma" ? SweepParam::Gamma : SweepParam::Lambda, grid, threads);
      std::ofstream file;
      if (sweep_out != "-") {
        file.open(sweep_out);
        if (!file) throw io::ParseError("cannot write '" + sweep_out + "'");
      }
      std::ostream& out = sweep_out == "-" ? std::cout : file;
      out << param << ",status,final_res,iterations,spectral_radius\n";
      for (const auto& r : rows) {
        out << fmt(r.value) << ',' << to_string(r.status) << ',' << fmt(r.final_res) << ',' << r.iterations << ','
            << (r.spectral_radius ? fmt(*r.spectral_radius) : "") << '\n';
      }
      const bool any_error = std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) {
        return r.status == RunStatus::Error;
      });
      return any_error ? 1 : 0;
    }

    if (*cmp_cmd) {
      const auto p = load_problem(cmp_spec);
      const auto cfg = cmp_flags.config();
      const bool with_drs = !no_drs && cfg.lambda_x == cfg.lambda_y;
      if (!no_drs && !with_drs) spdlog::info("compare: lambda_x != lambda_y, DRS excluded");
      const auto r = compare(p, cmp_flags.start(p), cfg, with_drs);
      std::cout << "rows=" << r.rows << "\nprogdec_vs_pppa=" << fmt(r.progdec_vs_pppa) << '\n';
      if (r.progdec_vs_drs) std::cout << "progdec_vs_drs=" << fmt(*r.progdec_vs_drs) << '\n';
      std::cout << "max_deviation=" << fmt(r.max_deviation()) << '\n';
      return r.max_deviation() <= kCompareTolerance ? 0 : 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace progdec::cli
