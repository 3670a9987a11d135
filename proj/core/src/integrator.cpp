#include "pulse/integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "pulse/errors.hpp"

namespace pulse {
namespace {

// Dormand-Prince 5(4) tableau.
constexpr std::array<double, 7> kC{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187, kA53 = 64448.0 / 6561,
                 kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33, kA63 = 46732.0 / 5247,
                 kA64 = 49.0 / 176, kA65 = -5103.0 / 18656;
constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192, kB5 = -2187.0 / 6784,
                 kB6 = 11.0 / 84;
// b - b* (difference between the 5th and embedded 4th order weights).
constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920,
                 kE5 = -17253.0 / 339200, kE6 = 22.0 / 525, kE7 = -1.0 / 40;

constexpr int kProbes = 9;

struct Hermite {
  double t0;
  double h;
  Vec c0, c1, c2, c3;

  Hermite(double t0_, double h_, const Vec& y0, const Vec& d0, const Vec& y1, const Vec& d1)
      : t0(t0_), h(h_) {
    const Vec dy = y1 - y0;
    c0 = y0;
    c1 = h * d0;
    c2 = 3.0 * dy - h * (2.0 * d0 + d1);
    c3 = -2.0 * dy + h * (d0 + d1);
  }
  Vec value(double theta) const { return c0 + theta * (c1 + theta * (c2 + theta * c3)); }
  Vec slope(double theta) const {
    return (c1 + theta * (2.0 * c2 + 3.0 * theta * c3)) / h;
  }
};

class Run {
 public:
  Run(const InclusionProblem& p, const Selection& sel, const StepControl& ctl)
      : p_(p), sel_(sel), ctl_(ctl), fired_(p.jump_count(), false), h_(ctl.h0) {
    ctl_.validate();
    p_.validate();
  }

  void start(const Vec& y0) {
    t_ = 0.0;
    y_ = y0;
    commit_node(0.0, y0, std::nullopt);
    fire_pending();
  }

  void resume(const Trajectory& source, double s) {
    if (source.selection_trace.empty()) {
      throw ContractViolation("continue_from: source trajectory carries no selection trace");
    }
    const auto& path = source.path;
    std::size_t k = 0;
    while (k + 1 < path.size() && path[k + 1].t < s) ++k;
    if (k + 1 >= path.size() || path[k].t >= s) {
      throw ContractViolation("continue_from: switch time outside the source path");
    }
    path_.assign(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(k + 1));
    for (const auto& tp : source.selection_trace) {
      if (tp.t < s) trace_.push_back(tp);
    }
    for (const auto& e : source.events) {
      if (e.time < s) {
        events_.push_back(e);
        fired_.at(e.surface) = true;
      }
    }
    const auto& a = path[k];
    const auto& b = path[k + 1];
    const Hermite seg(a.t, b.t - a.t, a.y, a.slope_out, b.y, b.slope_in);
    const double theta = (s - a.t) / (b.t - a.t);
    const Vec y = theta >= 1.0 ? b.y : seg.value(theta);
    const Vec slope = theta >= 1.0 ? b.slope_in : seg.slope(theta);
    t_ = s;
    y_ = y;
    commit_node(s, y, slope);
    fire_pending();
  }

  Trajectory finish() {
    std::size_t steps = 0;
    const double a = p_.horizon;
    while (t_ < a) {
      if (++steps > ctl_.max_steps) {
        throw IntegrationFailure("solve: step budget exhausted", t_);
      }
      step();
    }
    Trajectory out{reduce(a, path_, p_.jump_count()), std::move(events_), std::move(trace_),
                   std::move(path_), sel_.label(), false};
    out.missing_jumps = std::find(fired_.begin(), fired_.end(), false) != fired_.end();
    return out;
  }

 private:
  bool fixed() const { return ctl_.min_step == ctl_.max_step; }

  Vec rhs(std::size_t piece, double t, const Vec& y) const {
    Vec v = sel_.on_piece(piece, t, y);
    if (v.size() != y.size() || !v.allFinite()) {
      std::ostringstream msg;
      msg << "selection '" << sel_.label() << "' returned an invalid value at t = " << t;
      throw SelectionError(msg.str());
    }
    return v;
  }

  double w(std::size_t j, double t, const Vec& y) const { return p_.surfaces[j].tau(y) - t; }

  double revisit_threshold() const { return std::max(10.0 * ctl_.event_tol, 1e-9); }

  // Appends the node (t, y); the right slope comes from the piece active at t.
  void commit_node(double t, const Vec& y, const std::optional<Vec>& slope_in) {
    piece_ = sel_.piece_at(t);
    f_ = rhs(piece_, t, y);
    audit(t, y, f_);
    path_.push_back({t, y, slope_in ? *slope_in : f_, f_});
    trace_.push_back({t, f_});
  }

  void audit(double t, const Vec& y, const Vec& value) const {
    if (!ctl_.audit || sel_.audit(p_.field, t, y, value)) return;
    std::ostringstream msg;
    msg << "selection '" << sel_.label() << "' left F(t, y) at t = " << t;
    throw SelectionError(msg.str());
  }

  void fire(std::size_t j) {
    const Vec pre = y_;
    const Vec post = pre + p_.surfaces[j].impulse(pre);
    if (!post.allFinite()) {
      throw IntegrationFailure("solve: impulse produced a non-finite state", t_);
    }
    fired_[j] = true;
    events_.push_back({j, t_, pre, post});
    path_.back().slope_out = path_.back().slope_in;
    y_ = post;
    f_ = rhs(piece_, t_, post);
    audit(t_, post, f_);
    path_.push_back({t_, post, f_, f_});
    trace_.push_back({t_, f_});
  }

  void fire_pending() {
    for (bool again = true; again;) {
      again = false;
      for (std::size_t j = 0; j < fired_.size(); ++j) {
        if (!fired_[j] && w(j, t_, y_) <= ctl_.event_tol) {
          fire(j);
          again = true;
          break;
        }
      }
    }
    check_revisit(t_, y_);
  }

  void check_revisit(double t, const Vec& y) const {
    for (std::size_t j = 0; j < fired_.size(); ++j) {
      if (fired_[j] && w(j, t, y) > revisit_threshold()) {
        std::ostringstream msg;
        msg << "trajectory returned to surface " << j << " at t = " << t
            << " after crossing it";
        throw SurfaceRevisit(msg.str(), j, t);
      }
    }
  }

  struct StepResult {
    Vec y;
    Vec f;
    double err;
  };

  StepResult rk_step(double h) const {
    const double t = t_;
    const Vec& y = y_;
    const Vec& k1 = f_;
    const Vec k2 = rhs(piece_, t + kC[1] * h, y + h * (kA21 * k1));
    const Vec k3 = rhs(piece_, t + kC[2] * h, y + h * (kA31 * k1 + kA32 * k2));
    const Vec k4 = rhs(piece_, t + kC[3] * h, y + h * (kA41 * k1 + kA42 * k2 + kA43 * k3));
    const Vec k5 = rhs(piece_, t + kC[4] * h,
                       y + h * (kA51 * k1 + kA52 * k2 + kA53 * k3 + kA54 * k4));
    const Vec k6 = rhs(piece_, t + kC[5] * h,
                       y + h * (kA61 * k1 + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5));
    Vec y1 = y + h * (kB1 * k1 + kB3 * k3 + kB4 * k4 + kB5 * k5 + kB6 * k6);
    Vec k7 = rhs(piece_, t + h, y1);
    const Vec e = h * (kE1 * k1 + kE3 * k3 + kE4 * k4 + kE5 * k5 + kE6 * k6 + kE7 * k7);
    const Vec scale =
        (ctl_.atol + ctl_.rtol * y.cwiseAbs().cwiseMax(y1.cwiseAbs()).array()).matrix();
    const double err = std::sqrt((e.array() / scale.array()).square().mean());
    return {std::move(y1), std::move(k7), err};
  }

  double next_boundary() const {
    const auto bps = sel_.breakpoints();
    const auto it = std::upper_bound(bps.begin(), bps.end(), t_);
    return it == bps.end() ? p_.horizon : std::min(p_.horizon, *it);
  }

  // Earliest crossing of an unfired surface inside the step, lowest index on
  // ties; also raises SurfaceRevisit for fired surfaces that come back.
  std::optional<std::pair<std::size_t, double>> scan(const Hermite& seg) const {
    std::optional<std::pair<std::size_t, double>> best;
    std::array<Vec, kProbes + 1> probe;
    for (int k = 0; k <= kProbes; ++k) probe[k] = seg.value(static_cast<double>(k) / kProbes);
    const auto time_at = [&seg](int k) { return seg.t0 + seg.h * k / kProbes; };
    for (std::size_t j = 0; j < fired_.size(); ++j) {
      if (fired_[j]) continue;
      double prev = w(j, seg.t0, probe[0]);
      for (int k = 1; k <= kProbes; ++k) {
        const double tk = time_at(k);
        const double cur = w(j, tk, probe[k]);
        if (prev > 0.0 && cur <= 0.0) {
          const auto wj = [this, &seg, j](double t) {
            return w(j, t, seg.value((t - seg.t0) / seg.h));
          };
          const double lo = time_at(k - 1);
          const double root =
              locate_crossing(wj, lo, tk, ctl_.event_tol, ctl_.event_tol);
          if (!best || root < best->second) best = std::make_pair(j, root);
          break;
        }
        prev = cur;
      }
    }
    const double limit = best ? best->second : seg.t0 + seg.h;
    for (int k = 1; k <= kProbes; ++k) {
      const double tk = time_at(k);
      if (tk > limit) break;
      check_revisit(tk, probe[k]);
    }
    return best;
  }

  void step() {
    const double boundary = next_boundary();
    double h = fixed() ? ctl_.max_step : std::clamp(h_, ctl_.min_step, ctl_.max_step);
    bool lands = false;
    if (t_ + 1.01 * h >= boundary) {
      h = boundary - t_;
      lands = true;
    }
    StepResult r = rk_step(h);
    if (!fixed()) {
      if (!(r.err <= 1.0)) {
        const double factor =
            std::isfinite(r.err) ? std::max(0.2, 0.9 * std::pow(r.err, -0.2)) : 0.2;
        h_ = h * factor;
        if (h_ < ctl_.min_step) {
          throw IntegrationFailure("solve: step size underflow", t_);
        }
        return;
      }
      const double grow = r.err > 0.0 ? std::min(5.0, 0.9 * std::pow(r.err, -0.2)) : 5.0;
      h_ = std::clamp(h * grow, ctl_.min_step, ctl_.max_step);
    }
    const double t1 = lands ? boundary : t_ + h;
    const Hermite seg(t_, t1 - t_, y_, f_, r.y, r.f);
    const auto event = scan(seg);
    if (event) {
      const auto [j, t_event] = *event;
      const double h_event = t_event - t_;
      double t_hit = t_event;
      StepResult re = h_event > 0.0 ? rk_step(h_event) : StepResult{y_, f_, 0.0};
      // The dense output and the re-step disagree at the local-error level;
      // polish the crossing on the state that is actually committed.
      for (int it = 0; it < 8; ++it) {
        const double wv = w(j, t_hit, re.y);
        if (std::abs(wv) <= 0.1 * ctl_.event_tol) break;
        const double slope = p_.surfaces[j].tau_grad(re.y).dot(re.f) - 1.0;
        if (!(slope < 0.0)) break;
        const double next = std::clamp(t_hit - wv / slope, t_, t1);
        if (next == t_hit || next <= t_) break;
        t_hit = next;
        re = rk_step(t_hit - t_);
      }
      const double t_event_final = t_hit;
      t_ = t_event_final;
      y_ = re.y;
      commit_node(t_event_final, re.y, re.f);
      if (!fired_[j]) fire(j);
      fire_pending();
      return;
    }
    t_ = t1;
    y_ = r.y;
    commit_node(t1, r.y, r.f);
    fire_pending();
  }

  const InclusionProblem& p_;
  const Selection& sel_;
  StepControl ctl_;
  std::vector<PathSample> path_;
  std::vector<JumpEvent> events_;
  std::vector<TracePoint> trace_;
  std::vector<bool> fired_;
  double t_ = 0.0;
  Vec y_;
  Vec f_;
  std::size_t piece_ = 0;
  double h_;
};

}  // namespace

void StepControl::validate() const {
  const bool ok = min_step > 0.0 && min_step <= h0 && h0 <= max_step && rtol > 0.0 &&
                  atol > 0.0 && event_tol > 0.0 && max_steps > 0 && std::isfinite(max_step);
  if (!ok) throw ContractViolation("StepControl: need 0 < min_step <= h0 <= max_step and tolerances > 0");
}

Trajectory solve(const InclusionProblem& p, const Selection& selection,
                 const StepControl& control) {
  if (p.y0.size() != p.dim()) throw ContractViolation("solve: y0 has the wrong dimension");
  Run run(p, selection, control);
  run.start(p.y0);
  return run.finish();
}

Trajectory continue_from(const InclusionProblem& p, const Selection& selection,
                         const StepControl& control, const Trajectory& source,
                         double switch_time) {
  if (switch_time <= 0.0) return solve(p, selection, control);
  if (switch_time >= p.horizon) return source;
  Run run(p, selection, control);
  run.resume(source, switch_time);
  return run.finish();
}

double locate_crossing(const std::function<double(double)>& w, double lo, double hi,
                       double time_tol, double value_tol) {
  if (!(lo < hi)) throw ContractViolation("locate_crossing: need lo < hi");
  double flo = w(lo);
  double fhi = w(hi);
  if (!(flo > 0.0 && fhi <= 0.0)) {
    throw ContractViolation("locate_crossing: no sign change across the bracket");
  }
  double true_fhi = fhi;
  int side = 0;
  double width = hi - lo;
  for (int iter = 0; iter < 400; ++iter) {
    if (true_fhi == 0.0 || (hi - lo <= time_tol && std::abs(true_fhi) <= value_tol)) break;
    double x = hi - fhi * (hi - lo) / (fhi - flo);
    // Fall back to bisection when the secant stalls or leaves the bracket.
    if (!(x > lo && x < hi) || (iter % 3 == 2 && hi - lo > 0.5 * width)) {
      x = 0.5 * (lo + hi);
      side = 0;
    }
    if (iter % 3 == 2) width = hi - lo;
    if (x <= lo || x >= hi) break;
    const double fx = w(x);
    if (fx > 0.0) {
      lo = x;
      flo = fx;
      if (side == 1) fhi *= 0.5;
      side = 1;
    } else {
      hi = x;
      fhi = fx;
      true_fhi = fx;
      if (side == -1) flo *= 0.5;
      side = -1;
    }
  }
  return hi;
}

MonotonicityReport post_jump_monotonicity(const Trajectory& trajectory,
                                          const InclusionProblem& p, double p_hat) {
  MonotonicityReport r;
  r.threshold = -0.5 * p_hat;
  const auto& path = trajectory.path;
  for (const auto& e : trajectory.events) {
    const auto& surface = p.surfaces.at(e.surface);
    // First sample after the jump is the post-jump state at e.time.
    std::size_t k = 0;
    while (k < path.size() && !(path[k].t == e.time && path[k].y == e.post)) ++k;
    for (; k + 1 < path.size(); ++k) {
      const auto& a = path[k];
      const auto& b = path[k + 1];
      if (!(b.t > a.t)) continue;
      const double slope =
          ((surface.tau(b.y) - b.t) - (surface.tau(a.y) - a.t)) / (b.t - a.t);
      ++r.slopes;
      if (slope > r.max_slope) {
        r.max_slope = slope;
        r.surface = e.surface;
        r.witness_t = a.t;
      }
    }
  }
  r.pass = r.slopes == 0 || r.max_slope <= r.threshold;
  return r;
}

}  // namespace pulse
