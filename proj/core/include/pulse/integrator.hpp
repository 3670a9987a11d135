#pragma once

// Event-driven Dormand-Prince integration of y' = g(t, y) for a selection g,
// with pulse-surface detection and impulse application.

#include <cstddef>
#include <functional>
#include <limits>

#include "pulse/fields.hpp"
#include "pulse/jumpspace.hpp"
#include "pulse/problem.hpp"

namespace pulse {

struct StepControl {
  double h0 = 1e-3;
  double min_step = 1e-12;
  double max_step = 0.02;
  double rtol = 1e-10;
  double atol = 1e-12;
  double event_tol = 1e-10;
  std::size_t max_steps = 1'000'000;
  /// Check every accepted node against F(t, y).
  bool audit = true;

  /// Throws ContractViolation unless 0 < min_step <= h0 <= max_step and all
  /// tolerances are positive. min_step == max_step selects fixed steps.
  void validate() const;
};

/// Solves the impulsive problem under `selection` from (0, y0) to t = a.
Trajectory solve(const InclusionProblem& p, const Selection& selection,
                 const StepControl& control = {});

/// Copies `source` on [0, switch_time] and continues under `selection`.
/// Surfaces crossed by `source` strictly before switch_time count as fired.
/// The source must carry its selection trace.
Trajectory continue_from(const InclusionProblem& p, const Selection& selection,
                         const StepControl& control, const Trajectory& source, double switch_time);

/// Root of w in [lo, hi] given w(lo) > 0 >= w(hi). Illinois-accelerated
/// regula falsi with bisection fallback. Returns a point with w <= 0 once the
/// bracket is narrower than time_tol and |w| <= value_tol (or the bracket can
/// no longer shrink).
double locate_crossing(const std::function<double(double)>& w, double lo, double hi,
                       double time_tol, double value_tol);

struct MonotonicityReport {
  bool pass = true;
  /// Largest finite-difference slope of any w_j after surface j fired.
  double max_slope = -std::numeric_limits<double>::infinity();
  double threshold = 0.0;
  std::size_t slopes = 0;
  std::size_t surface = 0;
  double witness_t = 0.0;
};

/// Finite-difference slopes of w_j(t) = tau_j(y(t)) - t over the trajectory's
/// nodes after surface j fired; passes iff every slope is <= -p_hat / 2.
MonotonicityReport post_jump_monotonicity(const Trajectory& trajectory,
                                          const InclusionProblem& p, double p_hat);

}  // namespace pulse
