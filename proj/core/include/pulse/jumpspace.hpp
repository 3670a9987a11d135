#pragma once

// Elements of CJ_m([0,a]): a continuous part on a time grid together with m
// (jump time, jump vector) records, plus the raw trajectory type produced by
// the integrator and the reduction that maps one onto the other.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pulse/types.hpp"

namespace pulse {

struct JumpRecord {
  double time = 0.0;
  Vec jump;
};

/// One node of a raw piecewise-continuous path. Two consecutive samples with
/// the same time encode a jump (pre-jump state first). A sample whose left and
/// right slopes differ is a kink, e.g. a switch of a bang-bang selection.
struct PathSample {
  double t = 0.0;
  Vec y;
  Vec slope_in;
  Vec slope_out;
};

/// Element (phi, (l_j, v_j)_{j=1..m}) of CJ_m([0,a]).
///
/// phi is a piecewise cubic Hermite interpolant on a strictly increasing grid
/// from 0 to a. Each node carries a left and a right slope so that kinks of
/// phi (where the driving selection switches) are represented exactly.
/// Values are immutable once constructed.
class JumpFunction {
 public:
  /// Slopes are estimated from the nodal values by three-point differences.
  JumpFunction(double horizon, std::vector<double> grid, const std::vector<Vec>& values,
               std::vector<JumpRecord> jumps);
  JumpFunction(double horizon, std::vector<double> grid, const std::vector<Vec>& values,
               const std::vector<Vec>& slopes_in, const std::vector<Vec>& slopes_out,
               std::vector<JumpRecord> jumps);

  /// phi(t) == value on [0, a].
  static JumpFunction constant(double horizon, const Vec& value,
                               std::vector<JumpRecord> jumps = {});

  double horizon() const noexcept { return horizon_; }
  int dim() const noexcept { return static_cast<int>(values_.rows()); }
  std::size_t jump_count() const noexcept { return jumps_.size(); }
  std::size_t node_count() const noexcept { return grid_.size(); }

  const std::vector<double>& grid() const noexcept { return grid_; }
  const Mat& values() const noexcept { return values_; }
  const Mat& slopes_in() const noexcept { return slopes_in_; }
  const Mat& slopes_out() const noexcept { return slopes_out_; }
  const std::vector<JumpRecord>& jumps() const noexcept { return jumps_; }

  /// Jump records ordered by time (the permutation sigma); ties are broken
  /// lexicographically on the jump vector so the order never depends on
  /// storage order.
  std::vector<JumpRecord> sorted_jumps() const;

  /// phi(t) for t in [0, a].
  Vec continuous(double t) const;
  Vec derivative_left(double t) const;
  Vec derivative_right(double t) const;

  /// phi(t) + sum of v_j over jumps with l_j < t (left-continuous at l_j).
  Vec eval_hat(double t) const;

  /// Copy padded with (a, 0) records up to m jumps; throws if m < jump_count().
  JumpFunction with_jump_count(std::size_t m) const;

  /// c * (phi, l, v), applied to all three jointly. Requires c >= 0 so the
  /// jump times stay in [0, a].
  JumpFunction scaled(double c) const;

  /// Coefficients (in s = (t - t_i)/h_i) of the cubic on grid interval i:
  /// columns are the constant, s, s^2 and s^3 terms.
  Mat interval_cubic(std::size_t i) const;
  std::size_t interval_index(double t) const;

 private:
  JumpFunction() = default;
  void validate() const;

  double horizon_ = 0.0;
  std::vector<double> grid_;
  Mat values_;
  Mat slopes_in_;
  Mat slopes_out_;
  std::vector<JumpRecord> jumps_;
};

/// sup_t |phi(t)| + sum_j (|l_j| + |v_j|), Euclidean norms throughout. The sup
/// is exact for the piecewise-cubic representation up to root-finding
/// precision.
double norm(const JumpFunction& f);

/// norm(f - g). Jump lists are sorted by time and the shorter one is padded
/// with (a, 0) records before subtracting.
double distance(const JumpFunction& f, const JumpFunction& g);

/// Maps a raw path onto its CJ_m representative: the continuous part has the
/// accumulated jumps subtracted and every jump becomes (t_j, post - pre). The
/// result is padded with (a, 0) records up to `jump_count`.
JumpFunction reduce(double horizon, std::span<const PathSample> path, std::size_t jump_count = 0);

struct JumpEvent {
  std::size_t surface = 0;
  double time = 0.0;
  Vec pre;
  Vec post;
};

struct TracePoint {
  double t = 0.0;
  Vec value;
};

/// A solved trajectory of the impulsive problem.
struct Trajectory {
  JumpFunction base;
  std::vector<JumpEvent> events;
  std::vector<TracePoint> selection_trace;
  std::vector<PathSample> path;
  std::string selection;
  /// Set when fewer surfaces fired than the problem declares; the missing
  /// jump records sit at time a with a zero vector.
  bool missing_jumps = false;
};

JumpFunction reduce(const Trajectory& trajectory);

}  // namespace pulse
