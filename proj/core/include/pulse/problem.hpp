#pragma once

// Impulsive inclusion problems, their a-priori bounds and grid verifiers for
// the growth, surface and transversality hypotheses.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pulse/fields.hpp"
#include "pulse/types.hpp"

namespace pulse {

/// Pulse hypersurface {t = tau(y)} with its gradient and the jump map I.
struct ImpulseSurface {
  std::function<double(const Vec&)> tau;
  std::function<Vec(const Vec&)> tau_grad;
  std::function<Vec(const Vec&)> impulse;
};

struct InclusionProblem {
  std::string name;
  double horizon = 1.0;
  Vec y0;
  SetField field;
  std::vector<ImpulseSurface> surfaces;
  /// Region on which the field and surfaces are meaningful (e.g. a quadrant).
  std::optional<BoundingBox> validity;
  /// Default region for the verifiers; falls back to the Gronwall ball.
  std::optional<BoundingBox> verification_region;

  int dim() const noexcept { return field.dim(); }
  std::size_t jump_count() const noexcept { return surfaces.size(); }
  /// Throws ContractViolation on inconsistent dimensions or callables.
  void validate() const;
};

struct GronwallBounds {
  /// A = integral of alpha over [0, a].
  double growth_integral = 0.0;
  /// (|y0| + 2A) e^A, the bound before the first jump.
  double K = 0.0;
  /// Bound after all m jumps (== K when m == 0).
  double K_bar = 0.0;
  /// K_1..K_m: bound after the j-th jump.
  std::vector<double> per_jump;
  /// c_1..c_m: max |I_j| over the ball of radius K_{j-1}.
  std::vector<double> impulse_bounds;
};

GronwallBounds gronwall_bounds(const InclusionProblem& p);

/// Sampling of [0, a] x region. `space_points` is the per-axis resolution,
/// rounded up to odd so the region's center is a node; in high dimension it
/// is first reduced so the spatial grid stays near 2^18 points.
struct GridSpec {
  int time_points = 8;
  int space_points = 64;
  std::optional<BoundingBox> region;
};

struct Witness {
  double t = 0.0;
  Vec y;
};

struct VerificationReport {
  std::string hypothesis;
  bool pass = false;
  double margin = 0.0;
  Witness witness;
  nlohmann::json grid;
  /// Max |tau_j'| over the grid (surface check only).
  std::optional<double> gradient_bound;
};

/// The verification region used when `grid.region` is unset: the declared
/// verification region if any, else the box around cl B(0, K_bar + 1)
/// clipped to the validity box, with points outside the ball discarded.
struct SampleRegion {
  BoundingBox box;
  std::optional<double> ball_radius;
};
SampleRegion verification_region(const InclusionProblem& p, const GridSpec& grid);

/// Spatial sample points of the region (row-major, first axis slowest).
std::vector<Vec> spatial_grid(const SampleRegion& region, int space_points);

/// margin = min over the grid of alpha(t)(1 + |y|) - sup |F(t, y)|.
VerificationReport check_growth(const InclusionProblem& p, const GridSpec& grid = {});

/// Ordering 0 < tau_j < tau_{j+1} < a and the post-jump inequalities; the
/// margin is the worst slack over strict and non-strict inequalities alike.
VerificationReport check_surfaces(const InclusionProblem& p, const GridSpec& grid = {});

/// margin = p_hat = min over the grid and j of 1 - support(F(t, y), tau_j'(y)).
VerificationReport check_transversality(const InclusionProblem& p, const GridSpec& grid = {});

}  // namespace pulse
