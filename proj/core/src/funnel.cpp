#include "pulse/funnel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "pulse/errors.hpp"
#include "pulse/parallel.hpp"
#include "pulse/random.hpp"

namespace pulse {
namespace {

template <class T>
T parse_number(std::string_view text, std::string_view what) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw UsageError("malformed " + std::string(what) + ": '" + std::string(text) + "'");
  }
  return value;
}

// Rethrows the active exception with "sample <index>: " prepended, keeping
// its type.
[[noreturn]] void rethrow_indexed(std::size_t index) {
  const auto prefix = [index](const std::exception& e) {
    return "sample " + std::to_string(index) + ": " + e.what();
  };
  try {
    throw;
  } catch (const IntegrationFailure& e) {
    throw IntegrationFailure(prefix(e), e.last_time());
  } catch (const SurfaceRevisit& e) {
    throw SurfaceRevisit(prefix(e), e.surface(), e.time());
  } catch (const SelectionError& e) {
    throw SelectionError(prefix(e));
  } catch (const ExtrapolationError& e) {
    throw ExtrapolationError(prefix(e));
  } catch (const DegenerateCorrespondence& e) {
    throw DegenerateCorrespondence(prefix(e));
  } catch (const DomainError& e) {
    throw DomainError(prefix(e));
  } catch (const ContractViolation& e) {
    throw ContractViolation(prefix(e));
  } catch (const Error& e) {
    throw Error(prefix(e));
  }
}

FunnelSample assemble(std::string problem, std::vector<Trajectory> members,
                      std::vector<Provenance> provenance) {
  FunnelSample s{std::move(problem), std::move(members), std::move(provenance), Mat()};
  s.distances = distance_matrix(s.members);
  return s;
}

// Moves g a distance of at most 1/n towards the extreme point of F(t, y) in a
// fixed direction. The result stays in F and within the 1/n-neighbourhood the
// level-n approximation admits; the move is shortened where needed so every
// surface keeps at least half of its transversality slack 1 - tau_j'(y) . g.
Selection step_towards_extreme(const InclusionProblem& p, Selection g, Vec direction, int n,
                               std::string label) {
  const auto slack = g.audit_slack();
  std::vector<double> breakpoints(g.breakpoints().begin(), g.breakpoints().end());
  auto eval = [field = p.field, surfaces = p.surfaces, g = std::move(g),
               direction = std::move(direction), n](std::size_t piece, double t, const Vec& y) {
    const Vec v = g.on_piece(piece, t, y);
    const Vec towards = field(t, y).extreme_point(direction) - v;
    const double length = towards.norm();
    if (!(length > 0.0)) return v;
    double weight = std::min(1.0, 1.0 / (n * length));
    for (const auto& s : surfaces) {
      const Vec grad = s.tau_grad(y);
      const double rate = grad.dot(towards);
      if (rate > 0.0) weight = std::min(weight, std::max(0.0, 0.5 * (1.0 - grad.dot(v))) / rate);
    }
    return Vec(v + weight * towards);
  };
  // A convex combination is no farther from F(t, y) than g itself.
  return Selection(std::move(label), std::move(eval), std::move(breakpoints), slack);
}

}  // namespace

Strategy Strategy::parse(std::string_view text, int dim) {
  Strategy s;
  s.text = std::string(text);
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const std::string_view arg = colon == std::string_view::npos ? "" : text.substr(colon + 1);
  const bool has_arg = colon != std::string_view::npos;
  if (name == "zero" || name == "center") {
    if (has_arg) throw UsageError("strategy '" + s.text + "' takes no argument");
    s.kind = name == "zero" ? Kind::zero : Kind::center;
  } else if (name == "extreme") {
    s.kind = Kind::extreme;
    std::vector<double> d;
    std::string_view rest = arg;
    while (has_arg) {
      const auto comma = rest.find(',');
      d.push_back(parse_number<double>(rest.substr(0, comma), "direction component"));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (static_cast<int>(d.size()) != dim) {
      throw UsageError("strategy '" + s.text + "' needs " + std::to_string(dim) + " components");
    }
    s.direction = Eigen::Map<const Vec>(d.data(), dim);
    if (!(s.direction.norm() > 0.0)) throw UsageError("extreme direction must be nonzero");
  } else if (name == "bangbang") {
    s.kind = Kind::bangbang;
    s.switches = parse_number<int>(arg, "switch count");
    if (s.switches < 0) throw UsageError("switch count must be >= 0");
  } else if (name == "mollified") {
    s.kind = Kind::mollified;
    s.level = parse_number<int>(arg, "mollification level");
    if (s.level < 1) throw UsageError("mollification level must be >= 1");
  } else {
    throw UsageError("unknown selection strategy '" + s.text + "'");
  }
  return s;
}

BoundingBox mollification_box(const InclusionProblem& p, const GronwallBounds& bounds) {
  const double radius = bounds.K_bar + 1.0;
  BoundingBox box{Vec::Constant(p.dim(), -radius), Vec::Constant(p.dim(), radius)};
  if (p.validity) box = box.intersect(*p.validity);
  if (!(box.lower.array() < box.upper.array()).all()) {
    throw ContractViolation("mollification box is empty");
  }
  return box;
}

Selection mollified_center(const InclusionProblem& p, int n, const GronwallBounds& bounds) {
  return mollify(p.field, n, mollification_box(p, bounds));
}

Selection make_selection(const InclusionProblem& p, const Strategy& strategy, std::uint64_t seed,
                         const GronwallBounds& bounds) {
  switch (strategy.kind) {
    case Strategy::Kind::zero:
      return select_zero(p.field);
    case Strategy::Kind::center:
      return select_center(p.field);
    case Strategy::Kind::extreme:
      return select_extreme(p.field, strategy.direction);
    case Strategy::Kind::bangbang:
      return select_random(p.field, p.horizon, seed, strategy.switches);
    case Strategy::Kind::mollified:
      return mollified_center(p, strategy.level, bounds);
  }
  throw ContractViolation("make_selection: unknown strategy kind");
}

Mat distance_matrix(const std::vector<Trajectory>& members) {
  const auto n = static_cast<Eigen::Index>(members.size());
  const auto rows = parallel_map(members.size(), [&members, n](std::size_t i) {
    std::vector<double> row(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index j = static_cast<Eigen::Index>(i) + 1; j < n; ++j) {
      row[static_cast<std::size_t>(j)] = distance(members[i].base, members[j].base);
    }
    return row;
  });
  Mat d = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      d(j, i) = d(i, j);
    }
  }
  return d;
}

FunnelSample sample_funnel(const InclusionProblem& p, const std::vector<Strategy>& strategies,
                           std::size_t count, std::uint64_t master_seed,
                           const StepControl& control) {
  if (count < 1) throw ContractViolation("sample_funnel: count must be >= 1");
  if (strategies.empty()) throw ContractViolation("sample_funnel: no strategies");
  const auto bounds = gronwall_bounds(p);
  std::vector<Provenance> provenance(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& s = strategies[i % strategies.size()];
    provenance[i] = {s.text, derive_seed(master_seed, i), s.level};
  }
  auto members = parallel_map(count, [&](std::size_t i) {
    try {
      const auto& s = strategies[i % strategies.size()];
      return solve(p, make_selection(p, s, provenance[i].seed, bounds), control);
    } catch (const Error&) {
      rethrow_indexed(i);
    }
  });
  return assemble(p.name, std::move(members), std::move(provenance));
}

double hausdorff_one_sided(const FunnelSample& from, const FunnelSample& to) {
  if (from.size() == 0 || to.size() == 0) throw DomainError("hausdorff: empty sample");
  if (from.members.front().base.dim() != to.members.front().base.dim()) {
    throw ContractViolation("hausdorff: samples of different dimensions");
  }
  const auto nearest = parallel_map(from.size(), [&](std::size_t i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : to.members) best = std::min(best, distance(from.members[i].base, b.base));
    return best;
  });
  return *std::max_element(nearest.begin(), nearest.end());
}

double hausdorff(const FunnelSample& a, const FunnelSample& b) {
  return std::max(hausdorff_one_sided(a, b), hausdorff_one_sided(b, a));
}

double kcenter_radius(const FunnelSample& sample, std::size_t k) {
  if (k < 1) throw ContractViolation("kcenter_radius: k must be >= 1");
  const auto n = static_cast<Eigen::Index>(sample.size());
  if (n == 0) throw DomainError("kcenter_radius: empty sample");
  if (sample.distances.rows() != n || sample.distances.cols() != n) {
    throw ContractViolation("kcenter_radius: distance matrix does not match the sample");
  }
  Vec nearest = sample.distances.col(0);
  for (std::size_t c = 1; c < k; ++c) {
    Eigen::Index far = 0;
    const double radius = nearest.maxCoeff(&far);
    if (radius <= 0.0) break;
    nearest = nearest.cwiseMin(sample.distances.col(far));
  }
  return nearest.maxCoeff();
}

FunnelSample level_family(const InclusionProblem& p, int n, const CascadeOptions& options,
                          const GronwallBounds& bounds) {
  if (n < 1) throw ContractViolation("level_family: level must be >= 1");
  if (options.count < 1) throw ContractViolation("level_family: count must be >= 1");
  const BoundingBox box = mollification_box(p, bounds);
  std::vector<Provenance> provenance(options.count);
  for (std::size_t i = 0; i < options.count; ++i) {
    std::ostringstream label;
    if (i == 0) {
      label << "mollified:" << n;
    } else {
      label << "mollified-bangbang:" << n << ":" << options.switches
            << (options.perturb ? "+step" : "");
    }
    provenance[i] = {label.str(), i == 0 ? options.seed : derive_seed(options.seed, i), n};
  }
  auto members = parallel_map(options.count, [&](std::size_t i) {
    try {
      if (i == 0) return solve(p, mollify(p.field, n, box), options.control);
      const std::uint64_t seed = provenance[i].seed;
      const auto schedule =
          DirectionSchedule::random(p.dim(), p.horizon, seed, options.switches);
      Selection anchor = select_schedule(p.field, schedule, "bangbang");
      Selection g = mollify(p.field, n, box, anchor);
      if (options.perturb) {
        Rng rng(derive_seed(seed, 1));
        g = step_towards_extreme(p, std::move(g), rng.unit_vector(p.dim()), n,
                                 provenance[i].strategy);
      }
      return solve(p, g, options.control);
    } catch (const Error&) {
      rethrow_indexed(i);
    }
  });
  return assemble(p.name, std::move(members), std::move(provenance));
}

CascadeReport approximation_cascade(const InclusionProblem& p, const CascadeOptions& options) {
  if (options.levels.empty()) throw ContractViolation("approximation_cascade: no levels");
  for (std::size_t i = 0; i < options.levels.size(); ++i) {
    if (options.levels[i] < 1 || (i > 0 && options.levels[i] <= options.levels[i - 1])) {
      throw ContractViolation("approximation_cascade: levels must be ascending and >= 1");
    }
  }
  const auto bounds = gronwall_bounds(p);
  CascadeReport report{p.name, options, {}};
  for (int n : options.levels) {
    report.levels.push_back({n, 0.0, 0.0, level_family(p, n, options, bounds)});
  }
  const auto& finest = report.levels.back().sample;
  for (auto& level : report.levels) {
    level.distance_to_finest = hausdorff_one_sided(level.sample, finest);
    level.kcenter_radius = kcenter_radius(level.sample, options.k);
  }
  return report;
}

double homotopy_switch_time(double horizon, double t_ybar, double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw DomainError("contract_homotopy: r must lie in [0, 1]");
  if (r == 0.5) return t_ybar;
  if (r < 0.5) return horizon - 2.0 * r * (horizon - t_ybar);
  return t_ybar - 2.0 * (r - 0.5) * t_ybar;
}

Trajectory contract_homotopy(const InclusionProblem& p, const Selection& g_n,
                             const Trajectory& ybar, double r, const StepControl& control) {
  if (ybar.selection_trace.empty()) {
    throw ContractViolation("contract_homotopy: ybar carries no selection trace");
  }
  const double t_ybar = ybar.events.empty() ? p.horizon : ybar.events.front().time;
  const double s = homotopy_switch_time(p.horizon, t_ybar, r);
  return continue_from(p, g_n, control, ybar, s);
}

Trajectory contract_homotopy(const InclusionProblem& p, int n, const Trajectory& ybar, double r,
                             const StepControl& control) {
  return contract_homotopy(p, mollified_center(p, n, gronwall_bounds(p)), ybar, r, control);
}

ProbeReport contractibility_probe(const InclusionProblem& p, int n, const FunnelSample& sample,
                                  const ProbeOptions& options) {
  if (sample.size() == 0) throw DomainError("contractibility_probe: empty sample");
  if (options.r_steps < 2 || options.r_steps % 2 != 0) {
    throw ContractViolation("contractibility_probe: r_steps must be even and >= 2");
  }
  const Selection g_n = mollified_center(p, n, gronwall_bounds(p));
  ProbeReport report;
  report.n = n;
  report.r_steps = options.r_steps;
  report.samples = sample.size();
  for (std::size_t k = 0; k <= options.r_steps; ++k) {
    report.r_grid.push_back(static_cast<double>(k) / static_cast<double>(options.r_steps));
  }

  struct PerSample {
    double start = 0.0;
    std::vector<double> increments;
    double containment = 0.0;
    std::optional<Trajectory> end;
  };
  const auto per = parallel_map(sample.size(), [&](std::size_t i) {
    try {
      PerSample out;
      const auto& ybar = sample.members[i];
      std::optional<Trajectory> previous;
      for (std::size_t k = 0; k < report.r_grid.size(); ++k) {
        Trajectory h = contract_homotopy(p, g_n, ybar, report.r_grid[k], options.control);
        if (k == 0) out.start = distance(h.base, ybar.base);
        if (previous) out.increments.push_back(distance(previous->base, h.base));
        if (options.containment) {
          double nearest = std::numeric_limits<double>::infinity();
          for (const auto& m : sample.members) nearest = std::min(nearest, distance(h.base, m.base));
          out.containment = std::max(out.containment, nearest);
        }
        previous = std::move(h);
      }
      out.end = std::move(previous);
      return out;
    } catch (const Error&) {
      rethrow_indexed(i);
    }
  });

  report.continuity.assign(options.r_steps, 0.0);
  double containment = 0.0;
  for (const auto& s : per) {
    report.start_identity = std::max(report.start_identity, s.start);
    report.endpoint_identity =
        std::max(report.endpoint_identity, distance(s.end->base, per.front().end->base));
    for (std::size_t k = 0; k < s.increments.size(); ++k) {
      report.continuity[k] = std::max(report.continuity[k], s.increments[k]);
    }
    containment = std::max(containment, s.containment);
  }
  report.continuity_max = *std::max_element(report.continuity.begin(), report.continuity.end());
  const std::size_t half = options.r_steps / 2;
  report.continuity_at_half = std::max(report.continuity[half - 1], report.continuity[half]);
  if (options.containment) report.containment = containment;
  return report;
}

}  // namespace pulse
