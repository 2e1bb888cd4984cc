#pragma once

#include "progdec/core.hpp"

#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace progdec {

enum class RunStatus { Converged, MaxIter, Diverged, Error };

inline std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "Converged";
    case RunStatus::MaxIter: return "MaxIter";
    case RunStatus::Diverged: return "Diverged";
    case RunStatus::Error: return "Error";
  }
  return "Error";
}

/// Linkage rows carry (x, y, xbar, ybar); z-space rows carry z in `x` and
/// zbar in `xbar`, with `y`/`ybar` left empty.
enum class TraceSpace { Linkage, ZSpace };

template <typename Scalar>
struct TraceRow {
  static constexpr Scalar kMissing = std::numeric_limits<Scalar>::quiet_NaN();

  int k = 0;
  Scalar res = Scalar(0);        ///< |z - zbar|^2 in the M*Lambda metric
  Scalar lyapunov = kMissing;    ///< |z - z*|^2 in the M*Lambda^{-1} metric, when z* is known
  Scalar alpha = kMissing;       ///< halfspace ratio, NaN when z = zbar
  Scalar gap = kMissing;         ///< halfspace slack at z*, when z* is known
  bool left_region = false;
  Vector<Scalar> x, y, xbar, ybar;
};

template <typename Scalar>
struct IterateTrace {
  TraceSpace space = TraceSpace::Linkage;
  std::vector<TraceRow<Scalar>> rows;
  RunStatus status = RunStatus::MaxIter;
  std::string message;
  Scalar alpha_bar = TraceRow<Scalar>::kMissing;  ///< guaranteed ratio bound when moduli are known
  bool left_region = false;
  std::vector<std::string> warnings;
  Vector<Scalar> final_x;  ///< iterate after the last recorded step (z for z-space traces)
  Vector<Scalar> final_y;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
};

using IterateTraceXd = IterateTrace<double>;

}  // namespace progdec
