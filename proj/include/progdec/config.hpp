#pragma once

#include "progdec/core.hpp"

namespace progdec {

/// Stepsize gamma and relaxation parameters (lambda_x, lambda_y) of the
/// three-parameter decoupling iteration, plus termination controls.
template <typename Scalar>
struct SolverConfig {
  Scalar gamma = Scalar(1);
  Scalar lambda_x = Scalar(1);
  Scalar lambda_y = Scalar(1);
  int max_iter = 10000;
  Scalar tol = Scalar(1e-9);  ///< stop once res <= tol^2
  bool record_diagnostics = true;

  void validate() const {
    if (!(gamma > Scalar(0))) throw InvalidArgument("solver config: gamma must be positive");
    if (!(lambda_x >= Scalar(0)) || !(lambda_y >= Scalar(0))) {
      throw InvalidArgument("solver config: relaxation parameters must be nonnegative");
    }
    if (max_iter < 0) throw InvalidArgument("solver config: max_iter must be nonnegative");
    if (!(tol > Scalar(0))) throw InvalidArgument("solver config: tol must be positive");
  }
};

using SolverConfigXd = SolverConfig<double>;

}  // namespace progdec
