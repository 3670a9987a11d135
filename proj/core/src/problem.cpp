#include "pulse/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pulse/errors.hpp"
#include "pulse/parallel.hpp"
#include "pulse/random.hpp"

namespace pulse {
namespace {

constexpr std::size_t kChunk = 1024;
constexpr double kInequalityTol = 1e-12;

std::vector<double> time_grid(double horizon, int points) {
  if (points < 1) throw ContractViolation("GridSpec: time_points must be >= 1");
  if (points == 1) return {0.0};
  std::vector<double> out(points);
  for (int k = 0; k < points; ++k) out[k] = horizon * k / (points - 1);
  return out;
}

// Points of cl B(0, radius) used to bound |I_j|: a lattice in low dimension,
// random interior points above that, plus points on the sphere.
std::vector<Vec> ball_samples(int dim, double radius) {
  std::vector<Vec> out;
  if (dim <= 3) {
    const int per_axis = dim == 1 ? 401 : (dim == 2 ? 81 : 31);
    std::vector<int> idx(dim, 0);
    for (;;) {
      Vec y(dim);
      for (int i = 0; i < dim; ++i) y[i] = radius * (2.0 * idx[i] / (per_axis - 1) - 1.0);
      if (y.norm() <= radius * (1.0 + 1e-12)) out.push_back(y);
      int axis = 0;
      while (axis < dim && ++idx[axis] == per_axis) idx[axis++] = 0;
      if (axis == dim) break;
    }
  }
  Rng rng(0xb0a11ULL);
  if (dim == 2) {
    for (int k = 0; k < 720; ++k) {
      const double phi = 2.0 * std::numbers::pi * k / 720;
      Vec y(2);
      y << radius * std::cos(phi), radius * std::sin(phi);
      out.push_back(y);
    }
  } else if (dim == 1) {
    out.push_back(Vec::Constant(1, radius));
    out.push_back(Vec::Constant(1, -radius));
  } else {
    for (int k = 0; k < 4096; ++k) out.push_back(radius * rng.unit_vector(dim));
  }
  if (dim > 3) {
    for (int k = 0; k < 20000; ++k) {
      const double r = radius * std::pow(rng.uniform(), 1.0 / dim);
      out.push_back(r * rng.unit_vector(dim));
    }
  }
  return out;
}

double integrate_growth(const InclusionProblem& p) {
  double error = 0.0;
  const auto alpha = [&p](double t) {
    const double v = p.field.growth(t);
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "growth coefficient is not finite at t = " << t;
      throw QuadratureFailure(msg.str());
    }
    return v;
  };
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      alpha, 0.0, p.horizon, 15, 1e-8, &error);
  if (!std::isfinite(value) || error > 1e-6 * (1.0 + std::abs(value))) {
    throw QuadratureFailure("integral of the growth coefficient did not converge");
  }
  return value;
}

struct Best {
  double slack = std::numeric_limits<double>::infinity();
  std::size_t time_index = 0;
  std::size_t point_index = 0;

  void offer(double s, std::size_t ti, std::size_t pi) {
    // Strict comparison keeps the first (lowest index) minimizer.
    if (s < slack) {
      slack = s;
      time_index = ti;
      point_index = pi;
    }
  }
};

// Minimizes `slack(t, y)` over times x points; chunks run in parallel and are
// merged in index order so the witness is deterministic.
template <class F>
Best sweep(const std::vector<double>& times, const std::vector<Vec>& points, F slack) {
  const std::size_t total = times.size() * points.size();
  const std::size_t chunks = (total + kChunk - 1) / kChunk;
  const auto partial = parallel_map(chunks, [&](std::size_t c) {
    Best best;
    const std::size_t end = std::min(total, (c + 1) * kChunk);
    for (std::size_t k = c * kChunk; k < end; ++k) {
      const std::size_t ti = k / points.size();
      const std::size_t pi = k % points.size();
      best.offer(slack(times[ti], points[pi]), ti, pi);
    }
    return best;
  });
  Best best;
  for (const auto& b : partial) best.offer(b.slack, b.time_index, b.point_index);
  return best;
}

nlohmann::json grid_json(const SampleRegion& region, const std::vector<double>& times,
                         const std::vector<Vec>& points, int space_points) {
  nlohmann::json g;
  g["time_points"] = times.size();
  g["space_points_per_axis"] = space_points;
  g["space_samples"] = points.size();
  g["lower"] = std::vector<double>(region.box.lower.begin(), region.box.lower.end());
  g["upper"] = std::vector<double>(region.box.upper.begin(), region.box.upper.end());
  if (region.ball_radius) g["ball_radius"] = *region.ball_radius;
  return g;
}

void require_points(const std::vector<Vec>& points) {
  if (points.empty()) throw ContractViolation("verification region contains no grid points");
}

}  // namespace

void InclusionProblem::validate() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ContractViolation("InclusionProblem: horizon must be positive and finite");
  }
  if (y0.size() != field.dim() || !y0.allFinite()) {
    throw ContractViolation("InclusionProblem: y0 must be finite with the field's dimension");
  }
  for (const auto& s : surfaces) {
    if (!s.tau || !s.tau_grad || !s.impulse) {
      throw ContractViolation("InclusionProblem: surface evaluators must be callable");
    }
  }
  for (const auto* box : {&validity, &verification_region}) {
    if (*box && ((*box)->dim() != dim() || (*box)->upper.size() != dim())) {
      throw ContractViolation("InclusionProblem: region has the wrong dimension");
    }
  }
}

GronwallBounds gronwall_bounds(const InclusionProblem& p) {
  p.validate();
  GronwallBounds b;
  b.growth_integral = integrate_growth(p);
  const double growth = std::exp(b.growth_integral);
  const double y0 = p.y0.norm();
  b.K = (y0 + 2.0 * b.growth_integral) * growth;
  double previous = b.K;
  double impulse_sum = 0.0;
  for (const auto& s : p.surfaces) {
    double c = 0.0;
    for (const auto& y : ball_samples(p.dim(), previous)) c = std::max(c, s.impulse(y).norm());
    b.impulse_bounds.push_back(c);
    impulse_sum += c;
    previous = (y0 + impulse_sum + 2.0 * b.growth_integral) * growth;
    b.per_jump.push_back(previous);
  }
  b.K_bar = previous;
  return b;
}

SampleRegion verification_region(const InclusionProblem& p, const GridSpec& grid) {
  if (grid.region) return {*grid.region, std::nullopt};
  if (p.verification_region) return {*p.verification_region, std::nullopt};
  const double radius = gronwall_bounds(p).K_bar + 1.0;
  BoundingBox box{Vec::Constant(p.dim(), -radius), Vec::Constant(p.dim(), radius)};
  if (p.validity) box = box.intersect(*p.validity);
  if ((box.lower.array() > box.upper.array()).any()) {
    throw ContractViolation("verification region is empty");
  }
  return {box, radius};
}

std::vector<Vec> spatial_grid(const SampleRegion& region, int space_points) {
  if (space_points < 1) throw ContractViolation("GridSpec: space_points must be >= 1");
  const int dim = region.box.dim();
  int q = space_points;
  while (q > 2 && std::pow(static_cast<double>(q), dim) > static_cast<double>(1 << 18)) --q;
  // An odd count puts a node on the box center (e.g. y = 0 of a symmetric box).
  if (q % 2 == 0) ++q;
  std::vector<Vec> out;
  std::vector<int> idx(dim, 0);
  const auto coord = [&](int axis, int k) {
    const double lo = region.box.lower[axis];
    const double hi = region.box.upper[axis];
    return q == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * k / (q - 1);
  };
  for (;;) {
    Vec y(dim);
    for (int i = 0; i < dim; ++i) y[i] = coord(i, idx[i]);
    if (!region.ball_radius || y.norm() <= *region.ball_radius) out.push_back(y);
    int axis = dim - 1;
    while (axis >= 0 && ++idx[axis] == q) idx[axis--] = 0;
    if (axis < 0) break;
  }
  return out;
}

VerificationReport check_growth(const InclusionProblem& p, const GridSpec& grid) {
  p.validate();
  const auto region = verification_region(p, grid);
  const auto times = time_grid(p.horizon, grid.time_points);
  const auto points = spatial_grid(region, grid.space_points);
  require_points(points);
  const Best best = sweep(times, points, [&p](double t, const Vec& y) {
    return p.field.growth(t) * (1.0 + y.norm()) - p.field(t, y).max_norm();
  });
  VerificationReport r;
  r.hypothesis = "F3";
  r.margin = best.slack;
  r.pass = best.slack >= 0.0;
  r.witness = {times[best.time_index], points[best.point_index]};
  r.grid = grid_json(region, times, points, grid.space_points);
  return r;
}

VerificationReport check_surfaces(const InclusionProblem& p, const GridSpec& grid) {
  p.validate();
  const std::size_t m = p.jump_count();
  if (m == 0) throw ContractViolation("check_surfaces: the problem has no surfaces");
  const auto region = verification_region(p, grid);
  const auto points = spatial_grid(region, grid.space_points);
  require_points(points);

  struct Partial {
    Best strict;
    Best loose;
    double gradient = 0.0;
  };
  const std::size_t chunks = (points.size() + kChunk - 1) / kChunk;
  const auto partial = parallel_map(chunks, [&](std::size_t c) {
    Partial out;
    const std::size_t end = std::min(points.size(), (c + 1) * kChunk);
    std::vector<double> tau(m);
    for (std::size_t k = c * kChunk; k < end; ++k) {
      const Vec& y = points[k];
      for (std::size_t j = 0; j < m; ++j) {
        tau[j] = p.surfaces[j].tau(y);
        out.gradient = std::max(out.gradient, p.surfaces[j].tau_grad(y).norm());
      }
      out.strict.offer(tau[0], 0, k);
      out.strict.offer(p.horizon - tau[m - 1], 0, k);
      for (std::size_t j = 0; j < m; ++j) {
        if (j + 1 < m) out.strict.offer(tau[j + 1] - tau[j], 0, k);
        const Vec after = y + p.surfaces[j].impulse(y);
        out.loose.offer(tau[j] - p.surfaces[j].tau(after), 0, k);
        if (j + 1 < m) out.strict.offer(p.surfaces[j + 1].tau(after) - tau[j], 0, k);
      }
    }
    return out;
  });
  Partial total;
  for (const auto& q : partial) {
    total.strict.offer(q.strict.slack, 0, q.strict.point_index);
    total.loose.offer(q.loose.slack, 0, q.loose.point_index);
    total.gradient = std::max(total.gradient, q.gradient);
  }
  VerificationReport r;
  r.hypothesis = "H2";
  const bool strict_worse = total.strict.slack <= total.loose.slack;
  r.margin = std::min(total.strict.slack, total.loose.slack);
  r.pass = total.strict.slack > 0.0 && total.loose.slack >= -kInequalityTol;
  const auto& worst = strict_worse ? total.strict : total.loose;
  r.witness = {0.0, points[worst.point_index]};
  r.grid = grid_json(region, {0.0}, points, grid.space_points);
  r.grid["strict_margin"] = total.strict.slack;
  r.grid["non_strict_margin"] = total.loose.slack;
  r.gradient_bound = total.gradient;
  return r;
}

VerificationReport check_transversality(const InclusionProblem& p, const GridSpec& grid) {
  p.validate();
  if (p.jump_count() == 0) {
    throw ContractViolation("check_transversality: the problem has no surfaces");
  }
  const auto region = verification_region(p, grid);
  const auto times = time_grid(p.horizon, grid.time_points);
  const auto points = spatial_grid(region, grid.space_points);
  require_points(points);
  const Best best = sweep(times, points, [&p](double t, const Vec& y) {
    const ConvexSet set = p.field(t, y);
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& s : p.surfaces) worst = std::min(worst, 1.0 - set.support(s.tau_grad(y)));
    return worst;
  });
  VerificationReport r;
  r.hypothesis = "H3";
  r.margin = best.slack;
  r.pass = best.slack > 0.0;
  r.witness = {times[best.time_index], points[best.point_index]};
  r.grid = grid_json(region, times, points, grid.space_points);
  return r;
}

}  // namespace pulse
