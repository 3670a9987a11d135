#include "pulse/jumpspace.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pulse/errors.hpp"

namespace pulse {
namespace {

Mat to_matrix(const std::vector<Vec>& columns, int rows_hint) {
  const int rows = columns.empty() ? rows_hint : static_cast<int>(columns.front().size());
  Mat m(rows, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].size() != rows) {
      throw ContractViolation("JumpFunction: nodal vectors have inconsistent dimensions");
    }
    m.col(static_cast<Eigen::Index>(i)) = columns[i];
  }
  return m;
}

// Three-point (second order) derivative estimates on a nonuniform grid.
Mat estimate_slopes(const std::vector<double>& grid, const Mat& values) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  Mat slopes(values.rows(), n);
  if (n == 2) {
    const Vec secant = (values.col(1) - values.col(0)) / (grid[1] - grid[0]);
    slopes.col(0) = secant;
    slopes.col(1) = secant;
    return slopes;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index c = std::clamp<Eigen::Index>(i, 1, n - 2);
    const double h0 = grid[c] - grid[c - 1];
    const double h1 = grid[c + 1] - grid[c];
    const auto ym = values.col(c - 1);
    const auto y0 = values.col(c);
    const auto yp = values.col(c + 1);
    if (i == c) {
      slopes.col(i) = -h1 / (h0 * (h0 + h1)) * ym + (h1 - h0) / (h0 * h1) * y0 +
                      h0 / (h1 * (h0 + h1)) * yp;
    } else if (i == 0) {
      slopes.col(i) = -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * ym + (h0 + h1) / (h0 * h1) * y0 -
                      h0 / (h1 * (h0 + h1)) * yp;
    } else {
      slopes.col(i) = h1 / (h0 * (h0 + h1)) * ym - (h0 + h1) / (h0 * h1) * y0 +
                      (2.0 * h1 + h0) / (h1 * (h0 + h1)) * yp;
    }
  }
  return slopes;
}

// Hermite data on [t0, t0 + h] converted to power form in s = (t - t0)/h.
void hermite_to_power(const Eigen::Ref<const Vec>& y0, const Eigen::Ref<const Vec>& d0,
                      const Eigen::Ref<const Vec>& y1, const Eigen::Ref<const Vec>& d1, double h,
                      Mat& out) {
  out.resize(y0.size(), 4);
  const Vec m0 = h * d0;
  const Vec m1 = h * d1;
  out.col(0) = y0;
  out.col(1) = m0;
  out.col(2) = -3.0 * y0 - 2.0 * m0 + 3.0 * y1 - m1;
  out.col(3) = 2.0 * y0 + m0 - 2.0 * y1 + m1;
}

double cubic_norm_at(const Mat& c, double s) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    const double v = c(i, 0) + s * (c(i, 1) + s * (c(i, 2) + s * c(i, 3)));
    acc += v * v;
  }
  return std::sqrt(acc);
}

// Maximum of |p(s)| for s in [0,1], where each component of p is a cubic.
// Interior maxima are roots of q = sum_i p_i p_i', a quintic, which are
// bracketed on a uniform subdivision and refined by bisection.
double sup_of_cubic(const Mat& c) {
  std::array<double, 6> q{};
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    const std::array<double, 4> p{c(i, 0), c(i, 1), c(i, 2), c(i, 3)};
    const std::array<double, 3> dp{p[1], 2.0 * p[2], 3.0 * p[3]};
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 3; ++b) q[a + b] += p[a] * dp[b];
    }
  }
  const auto q_at = [&q](double s) {
    double v = q[5];
    for (int k = 4; k >= 0; --k) v = v * s + q[k];
    return v;
  };

  double best = std::max(cubic_norm_at(c, 0.0), cubic_norm_at(c, 1.0));
  constexpr int kSubdivisions = 24;
  double s_lo = 0.0;
  double q_lo = q_at(s_lo);
  for (int k = 1; k <= kSubdivisions; ++k) {
    const double s_hi = static_cast<double>(k) / kSubdivisions;
    const double q_hi = q_at(s_hi);
    if ((q_lo > 0.0 && q_hi < 0.0) || (q_lo < 0.0 && q_hi > 0.0)) {
      double lo = s_lo;
      double hi = s_hi;
      double f_lo = q_lo;
      for (int it = 0; it < 60 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = q_at(mid);
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
          lo = mid;
          f_lo = f_mid;
        } else {
          hi = mid;
        }
      }
      best = std::max({best, cubic_norm_at(c, lo), cubic_norm_at(c, hi)});
    } else if (q_hi == 0.0) {
      best = std::max(best, cubic_norm_at(c, s_hi));
    }
    s_lo = s_hi;
    q_lo = q_hi;
  }
  return best;
}

bool jump_less(const JumpRecord& a, const JumpRecord& b) {
  if (a.time != b.time) return a.time < b.time;
  return std::lexicographical_compare(a.jump.data(), a.jump.data() + a.jump.size(), b.jump.data(),
                                      b.jump.data() + b.jump.size());
}

// Value and one-sided derivative of phi at t, using the cubic of interval i.
void eval_on_interval(const JumpFunction& f, std::size_t i, double t, Vec& value, Vec& deriv) {
  const auto& grid = f.grid();
  const double t0 = grid[i];
  const double h = grid[i + 1] - t0;
  const double s = (t - t0) / h;
  const auto ei = static_cast<Eigen::Index>(i);
  if (s == 0.0) {
    value = f.values().col(ei);
    deriv = f.slopes_out().col(ei);
    return;
  }
  if (s == 1.0) {
    value = f.values().col(ei + 1);
    deriv = f.slopes_in().col(ei + 1);
    return;
  }
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  const auto y0 = f.values().col(ei);
  const auto y1 = f.values().col(ei + 1);
  const auto m0 = f.slopes_out().col(ei);
  const auto m1 = f.slopes_in().col(ei + 1);
  value = h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1;
  const double d00 = (6.0 * s2 - 6.0 * s) / h;
  const double d10 = 3.0 * s2 - 4.0 * s + 1.0;
  const double d01 = (-6.0 * s2 + 6.0 * s) / h;
  const double d11 = 3.0 * s2 - 2.0 * s;
  deriv = d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1;
}

// sup_t |phi_f(t) - phi_g(t)| (or |phi_f| when g is null) over the union of
// both grids. On each union interval both continuous parts are single cubics,
// so their difference is again a cubic with exact Hermite data.
double sup_norm(const JumpFunction& f, const JumpFunction* g) {
  std::vector<double> nodes = f.grid();
  if (g != nullptr) {
    std::vector<double> merged;
    merged.reserve(nodes.size() + g->grid().size());
    std::merge(nodes.begin(), nodes.end(), g->grid().begin(), g->grid().end(),
               std::back_inserter(merged));
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    nodes = std::move(merged);
  }
  std::size_t fi = 0;
  std::size_t gi = 0;
  Vec fy0, fd0, fy1, fd1, gy0, gd0, gy1, gd1;
  Mat coeffs;
  double best = 0.0;
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    const double u0 = nodes[k];
    const double u1 = nodes[k + 1];
    while (f.grid()[fi + 1] <= u0) ++fi;
    eval_on_interval(f, fi, u0, fy0, fd0);
    eval_on_interval(f, fi, u1, fy1, fd1);
    if (g != nullptr) {
      while (g->grid()[gi + 1] <= u0) ++gi;
      eval_on_interval(*g, gi, u0, gy0, gd0);
      eval_on_interval(*g, gi, u1, gy1, gd1);
      fy0 -= gy0;
      fd0 -= gd0;
      fy1 -= gy1;
      fd1 -= gd1;
    }
    hermite_to_power(fy0, fd0, fy1, fd1, u1 - u0, coeffs);
    best = std::max(best, sup_of_cubic(coeffs));
  }
  return best;
}

void check_compatible(const JumpFunction& f, const JumpFunction& g) {
  if (f.dim() != g.dim()) {
    throw ContractViolation("distance: dimension mismatch");
  }
  if (f.horizon() != g.horizon()) {
    throw ContractViolation("distance: horizon mismatch");
  }
}

}  // namespace

JumpFunction::JumpFunction(double horizon, std::vector<double> grid,
                           const std::vector<Vec>& values, std::vector<JumpRecord> jumps)
    : horizon_(horizon), grid_(std::move(grid)), jumps_(std::move(jumps)) {
  values_ = to_matrix(values, 0);
  if (grid_.size() < 2 || static_cast<Eigen::Index>(grid_.size()) != values_.cols()) {
    throw ContractViolation("JumpFunction: need at least two nodes and one value per node");
  }
  validate();
  slopes_in_ = estimate_slopes(grid_, values_);
  slopes_out_ = slopes_in_;
}

JumpFunction::JumpFunction(double horizon, std::vector<double> grid,
                           const std::vector<Vec>& values, const std::vector<Vec>& slopes_in,
                           const std::vector<Vec>& slopes_out, std::vector<JumpRecord> jumps)
    : horizon_(horizon), grid_(std::move(grid)), jumps_(std::move(jumps)) {
  values_ = to_matrix(values, 0);
  slopes_in_ = to_matrix(slopes_in, static_cast<int>(values_.rows()));
  slopes_out_ = to_matrix(slopes_out, static_cast<int>(values_.rows()));
  if (slopes_in_.rows() != values_.rows() || slopes_out_.rows() != values_.rows() ||
      slopes_in_.cols() != values_.cols() || slopes_out_.cols() != values_.cols()) {
    throw ContractViolation("JumpFunction: slope arrays do not match the values");
  }
  validate();
}

JumpFunction JumpFunction::constant(double horizon, const Vec& value,
                                    std::vector<JumpRecord> jumps) {
  const Vec zero = Vec::Zero(value.size());
  return JumpFunction(horizon, {0.0, horizon}, {value, value}, {zero, zero}, {zero, zero},
                      std::move(jumps));
}

void JumpFunction::validate() const {
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
    throw ContractViolation("JumpFunction: horizon must be positive and finite");
  }
  if (values_.rows() < 1) {
    throw ContractViolation("JumpFunction: dimension must be positive");
  }
  if (grid_.size() < 2 || static_cast<Eigen::Index>(grid_.size()) != values_.cols()) {
    throw ContractViolation("JumpFunction: need at least two nodes and one value per node");
  }
  if (grid_.front() != 0.0 || grid_.back() != horizon_) {
    throw ContractViolation("JumpFunction: grid must start at 0 and end at the horizon");
  }
  for (std::size_t i = 1; i < grid_.size(); ++i) {
    if (!(grid_[i] > grid_[i - 1])) {
      throw ContractViolation("JumpFunction: grid must be strictly increasing");
    }
  }
  if (!values_.allFinite()) {
    throw ContractViolation("JumpFunction: non-finite nodal value");
  }
  for (const auto& j : jumps_) {
    if (!(j.time >= 0.0 && j.time <= horizon_)) {
      throw ContractViolation("JumpFunction: jump time outside [0, a]");
    }
    if (j.jump.size() != values_.rows() || !j.jump.allFinite()) {
      throw ContractViolation("JumpFunction: malformed jump vector");
    }
  }
}

std::vector<JumpRecord> JumpFunction::sorted_jumps() const {
  std::vector<JumpRecord> out = jumps_;
  std::sort(out.begin(), out.end(), jump_less);
  return out;
}

std::size_t JumpFunction::interval_index(double t) const {
  if (!(t >= 0.0 && t <= horizon_)) {
    std::ostringstream msg;
    msg << "JumpFunction: t = " << t << " outside [0, " << horizon_ << "]";
    throw DomainError(msg.str());
  }
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
  const auto idx = static_cast<std::size_t>(std::distance(grid_.begin(), it));
  return std::clamp<std::size_t>(idx == 0 ? 0 : idx - 1, 0, grid_.size() - 2);
}

Vec JumpFunction::continuous(double t) const {
  const std::size_t i = interval_index(t);
  Vec value, deriv;
  eval_on_interval(*this, i, t, value, deriv);
  return value;
}

Vec JumpFunction::derivative_right(double t) const {
  const std::size_t i = interval_index(t);
  Vec value, deriv;
  eval_on_interval(*this, i, t, value, deriv);
  return deriv;
}

Vec JumpFunction::derivative_left(double t) const {
  std::size_t i = interval_index(t);
  if (i > 0 && t == grid_[i]) --i;
  Vec value, deriv;
  eval_on_interval(*this, i, t, value, deriv);
  return deriv;
}

Vec JumpFunction::eval_hat(double t) const {
  // Summed in sigma order so the result never depends on storage order.
  Vec out = continuous(t);
  for (const auto& j : sorted_jumps()) {
    if (!(j.time < t)) break;
    out += j.jump;
  }
  return out;
}

JumpFunction JumpFunction::with_jump_count(std::size_t m) const {
  if (m < jumps_.size()) {
    throw ContractViolation("JumpFunction: cannot pad to fewer jumps than stored");
  }
  JumpFunction out = *this;
  while (out.jumps_.size() < m) {
    out.jumps_.push_back({horizon_, Vec::Zero(values_.rows())});
  }
  return out;
}

JumpFunction JumpFunction::scaled(double c) const {
  if (!(c >= 0.0) || !std::isfinite(c)) {
    throw DomainError("JumpFunction::scaled: factor must be finite and non-negative");
  }
  JumpFunction out = *this;
  out.values_ *= c;
  out.slopes_in_ *= c;
  out.slopes_out_ *= c;
  for (auto& j : out.jumps_) {
    j.time *= c;
    j.jump *= c;
  }
  out.validate();
  return out;
}

Mat JumpFunction::interval_cubic(std::size_t i) const {
  if (i + 1 >= grid_.size()) throw ContractViolation("interval_cubic: index out of range");
  const auto ei = static_cast<Eigen::Index>(i);
  Mat out;
  hermite_to_power(values_.col(ei), slopes_out_.col(ei), values_.col(ei + 1),
                   slopes_in_.col(ei + 1), grid_[i + 1] - grid_[i], out);
  return out;
}

double norm(const JumpFunction& f) {
  double total = sup_norm(f, nullptr);
  for (const auto& j : f.sorted_jumps()) total += std::abs(j.time) + j.jump.norm();
  return total;
}

double distance(const JumpFunction& f, const JumpFunction& g) {
  check_compatible(f, g);
  const std::size_t m = std::max(f.jump_count(), g.jump_count());
  const auto fj = f.with_jump_count(m).sorted_jumps();
  const auto gj = g.with_jump_count(m).sorted_jumps();
  double total = sup_norm(f, &g);
  for (std::size_t k = 0; k < m; ++k) {
    total += std::abs(fj[k].time - gj[k].time) + (fj[k].jump - gj[k].jump).norm();
  }
  return total;
}

JumpFunction reduce(double horizon, std::span<const PathSample> path, std::size_t jump_count) {
  if (path.size() < 2) {
    throw ContractViolation("reduce: path needs at least two samples");
  }
  const auto dim = path.front().y.size();
  std::vector<double> grid;
  std::vector<Vec> values, slopes_in, slopes_out;
  std::vector<JumpRecord> jumps;
  grid.reserve(path.size());
  values.reserve(path.size());
  Vec accumulated = Vec::Zero(dim);
  for (std::size_t i = 0; i < path.size(); ++i) {
    const auto& s = path[i];
    if (s.y.size() != dim || s.slope_in.size() != dim || s.slope_out.size() != dim) {
      throw ContractViolation("reduce: inconsistent sample dimensions");
    }
    if (i > 0 && s.t < path[i - 1].t) {
      throw ContractViolation("reduce: path times must be non-decreasing");
    }
    if (i > 0 && s.t == path[i - 1].t) {
      if (!jumps.empty() && jumps.back().time == s.t) {
        std::ostringstream msg;
        msg << "reduce: two jumps share time " << s.t;
        throw DegenerateCorrespondence(msg.str());
      }
      Vec v = s.y - path[i - 1].y;
      accumulated += v;
      jumps.push_back({s.t, std::move(v)});
      slopes_out.back() = s.slope_out;
      continue;
    }
    grid.push_back(s.t);
    values.push_back(s.y - accumulated);
    slopes_in.push_back(s.slope_in);
    slopes_out.push_back(s.slope_out);
  }
  if (jumps.size() > jump_count) jump_count = jumps.size();
  JumpFunction base(horizon, std::move(grid), values, slopes_in, slopes_out, std::move(jumps));
  return base.with_jump_count(jump_count);
}

JumpFunction reduce(const Trajectory& trajectory) {
  return reduce(trajectory.base.horizon(), trajectory.path, trajectory.base.jump_count());
}

}  // namespace pulse
