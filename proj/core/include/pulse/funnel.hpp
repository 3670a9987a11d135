#pragma once

// Finite samples of the solution funnel, distances between them, the
// approximation cascade over mollification levels and the contraction
// homotopy h(r, ybar).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pulse/fields.hpp"
#include "pulse/integrator.hpp"
#include "pulse/jumpspace.hpp"
#include "pulse/problem.hpp"

namespace pulse {

/// Selection strategy spelled zero | center | extreme:<d1,...,dN> |
/// bangbang:<switches> | mollified:<n>.
struct Strategy {
  enum class Kind { zero, center, extreme, bangbang, mollified };

  Kind kind = Kind::zero;
  Vec direction;
  int switches = 0;
  int level = 0;
  std::string text;

  /// Throws UsageError on unknown names or malformed arguments.
  static Strategy parse(std::string_view text, int dim);
};

/// Box on which mollified selections are built: cl B(0, K_bar + 1) clipped to
/// the validity box.
BoundingBox mollification_box(const InclusionProblem& p, const GronwallBounds& bounds);

/// The selection a strategy denotes; `seed` drives bang-bang schedules.
Selection make_selection(const InclusionProblem& p, const Strategy& strategy, std::uint64_t seed,
                         const GronwallBounds& bounds);

/// g_n: the center selection mollified at level n.
Selection mollified_center(const InclusionProblem& p, int n, const GronwallBounds& bounds);

struct Provenance {
  std::string strategy;
  std::uint64_t seed = 0;
  int level = 0;
};

struct FunnelSample {
  std::string problem;
  std::vector<Trajectory> members;
  std::vector<Provenance> provenance;
  /// Pairwise CJ_m distances between members.
  Mat distances;

  std::size_t size() const noexcept { return members.size(); }
};

/// Pairwise distance matrix; rows are computed in parallel.
Mat distance_matrix(const std::vector<Trajectory>& members);

/// Solves `count` trajectories; member i uses strategies[i % size] and seed
/// derive_seed(master_seed, i). Solver errors are rethrown with the index.
FunnelSample sample_funnel(const InclusionProblem& p, const std::vector<Strategy>& strategies,
                           std::size_t count, std::uint64_t master_seed,
                           const StepControl& control = {});

/// sup over a in `from` of the distance from a to `to`.
double hausdorff_one_sided(const FunnelSample& from, const FunnelSample& to);
double hausdorff(const FunnelSample& a, const FunnelSample& b);

/// Greedy farthest-point k-center covering radius; the first center is
/// member 0 and ties go to the lowest index.
double kcenter_radius(const FunnelSample& sample, std::size_t k);

struct CascadeOptions {
  std::vector<int> levels;
  std::size_t count = 32;
  std::uint64_t seed = 0;
  /// Switches of the bang-bang anchor schedules.
  int switches = 3;
  std::size_t k = 5;
  /// Move members up to 1/n towards an extreme point of F.
  bool perturb = true;
  StepControl control;
};

/// Level-n family: member 0 follows g_n, member i >= 1 a mollified bang-bang
/// selection whose schedule depends only on (seed, i), so all levels share
/// their random schedules.
FunnelSample level_family(const InclusionProblem& p, int n, const CascadeOptions& options,
                          const GronwallBounds& bounds);

struct CascadeLevel {
  int n = 0;
  double distance_to_finest = 0.0;
  double kcenter_radius = 0.0;
  FunnelSample sample;
};

struct CascadeReport {
  std::string problem;
  CascadeOptions options;
  std::vector<CascadeLevel> levels;
};

/// Throws ContractViolation unless the levels are strictly ascending.
CascadeReport approximation_cascade(const InclusionProblem& p, const CascadeOptions& options);

/// Time up to which h(r, ybar) copies ybar; t_ybar is ybar's first jump time.
double homotopy_switch_time(double horizon, double t_ybar, double r);

/// h(r, ybar): ybar up to the switch time, then the solution under g_n.
Trajectory contract_homotopy(const InclusionProblem& p, const Selection& g_n,
                             const Trajectory& ybar, double r, const StepControl& control = {});
Trajectory contract_homotopy(const InclusionProblem& p, int n, const Trajectory& ybar, double r,
                             const StepControl& control = {});

struct ProbeOptions {
  std::size_t r_steps = 64;
  /// Distance of every intermediate trajectory to the sample (expensive).
  bool containment = false;
  StepControl control;
};

struct ProbeReport {
  int n = 0;
  std::size_t r_steps = 0;
  std::size_t samples = 0;
  /// max over ybar of d(h(0, ybar), ybar).
  double start_identity = 0.0;
  /// max over ybar of d(h(1, ybar), h(1, ybar_0)).
  double endpoint_identity = 0.0;
  /// continuity[k] = max over ybar of d(h(r_k, ybar), h(r_{k+1}, ybar)).
  std::vector<double> r_grid;
  std::vector<double> continuity;
  double continuity_max = 0.0;
  /// Largest increment of an interval touching r = 1/2.
  double continuity_at_half = 0.0;
  std::optional<double> containment;
};

ProbeReport contractibility_probe(const InclusionProblem& p, int n, const FunnelSample& sample,
                                  const ProbeOptions& options = {});

}  // namespace pulse
