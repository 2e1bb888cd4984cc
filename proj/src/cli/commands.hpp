#pragma once

#include "progdec/problems.hpp"
#include "progdec/solvers.hpp"

#include <optional>
#include <string>
#include <vector>

namespace progdec::cli {

/// Built-in label with parameters, or matrix/offset/subspace files.
struct ProblemSpec {
  std::string name;  ///< tightness | linear-system | rosenbrock | double-well; empty for files
  double a = 1.0;
  double b = 1.0;
  std::string matrix_file;
  std::string offset_file;
  std::string subspace_file;
};

LinkageProblem<double> load_problem(const ProblemSpec& spec);

struct StartPoint {
  VectorXd x0;
  VectorXd y0;
};

/// The documented starting pair for each built-in; P_X(1,...,1) and 0 for files.
StartPoint default_start(const LinkageProblem<double>& p);

enum class SolverKind { ProgDec, Pppa, Drs, Spingarn, ProgDecClassic };
SolverKind parse_solver(const std::string& name);

int exit_code(RunStatus s);

/// Final |P_Xperp x| + |P_X y| + |y - S(x)| of a trace, mapped to linkage
/// coordinates for z-space traces.
double final_linkage_residual(const LinkageProblem<double>& p, const IterateTraceXd& t);

struct SolveRequest {
  SolverKind solver = SolverKind::ProgDec;
  SolverConfig<double> cfg;
  std::optional<double> lambda;   ///< drs relaxation; overrides lambda_x/lambda_y
  std::optional<double> mu;       ///< progdec-classic; defaults to the problem moduli
  StartPoint start;
};

IterateTraceXd solve(const LinkageProblem<double>& p, const SolveRequest& req);

enum class SweepParam { Lambda, Gamma };

struct SweepRow {
  double value = 0;
  RunStatus status = RunStatus::Error;
  double final_res = 0;
  int iterations = 0;
  std::optional<double> spectral_radius;
};

/// One independent progdec run per grid value, executed on up to `threads`
/// workers; rows come back in grid order.
std::vector<SweepRow> sweep(const LinkageProblem<double>& p, const StartPoint& start,
                            const SolverConfig<double>& base, SweepParam param,
                            const std::vector<double>& grid, unsigned threads = 0);

std::vector<double> linspace(double from, double to, int points);

struct CompareResult {
  double progdec_vs_pppa = 0;
  std::optional<double> progdec_vs_drs;
  int rows = 0;
  double max_deviation() const;
};

/// Runs progdec, the z-space proximal point method (explicit partial inverse
/// for affine operators) and, when requested and lambda_x = lambda_y, the
/// relaxed Douglas-Rachford method; reports componentwise max deviations
/// over the common prefix.
CompareResult compare(const LinkageProblem<double>& p, const StartPoint& start, const SolverConfig<double>& cfg,
                      bool include_drs);

int run(int argc, char** argv);

}  // namespace progdec::cli
