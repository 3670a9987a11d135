#include "pulse/serialize.hpp"

#include <algorithm>
#include <cmath>

#include "pulse/errors.hpp"

namespace pulse {

using nlohmann::json;

namespace {

json columns(const Mat& m) {
  json out = json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(to_json(Vec(m.col(c))));
  return out;
}

std::vector<Vec> columns_from_json(const json& j) {
  std::vector<Vec> out;
  for (const auto& v : j) out.push_back(vec_from_json(v));
  return out;
}

// JSON has no infinities; unbounded box sides are written as null.
json bound_json(const Vec& v) {
  json out = json::array();
  for (double x : v) {
    if (std::isfinite(x)) {
      out.push_back(x);
    } else {
      out.push_back(nullptr);
    }
  }
  return out;
}

}  // namespace

json to_json(const Vec& v) { return std::vector<double>(v.begin(), v.end()); }

Vec vec_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json to_json(const JumpFunction& f) {
  json jumps = json::array();
  for (const auto& r : f.jumps()) jumps.push_back({{"l", r.time}, {"v", to_json(r.jump)}});
  return {{"horizon", f.horizon()},   {"dim", f.dim()},
          {"grid", f.grid()},         {"values", columns(f.values())},
          {"slopes_in", columns(f.slopes_in())}, {"slopes_out", columns(f.slopes_out())},
          {"jumps", std::move(jumps)}};
}

JumpFunction jump_function_from_json(const json& j) {
  try {
    std::vector<JumpRecord> jumps;
    for (const auto& r : j.at("jumps")) jumps.push_back({r.at("l").get<double>(), vec_from_json(r.at("v"))});
    auto grid = j.at("grid").get<std::vector<double>>();
    const auto values = columns_from_json(j.at("values"));
    if (j.contains("slopes_in") && j.contains("slopes_out")) {
      return JumpFunction(j.at("horizon").get<double>(), std::move(grid), values,
                          columns_from_json(j.at("slopes_in")),
                          columns_from_json(j.at("slopes_out")), std::move(jumps));
    }
    return JumpFunction(j.at("horizon").get<double>(), std::move(grid), values, std::move(jumps));
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("malformed JumpFunction JSON: ") + e.what());
  }
}

json to_json(const Trajectory& t) {
  json out = to_json(t.base);
  json events = json::array();
  for (const auto& e : t.events) {
    events.push_back(
        {{"surface", e.surface}, {"t", e.time}, {"pre", to_json(e.pre)}, {"post", to_json(e.post)}});
  }
  out["events"] = std::move(events);
  out["selection"] = t.selection;
  out["missing_jumps"] = t.missing_jumps;
  return out;
}

json to_json(const ConvexSet& s) {
  switch (s.kind()) {
    case ConvexSet::Kind::box:
      return {{"kind", "box"}, {"lower", to_json(s.lower())}, {"upper", to_json(s.upper())}};
    case ConvexSet::Kind::ball:
      return {{"kind", "ball"}, {"center", to_json(s.ball_center())}, {"radius", s.radius()}};
    case ConvexSet::Kind::polytope:
      return {{"kind", "polytope"}, {"vertices", [&s] {
                json v = json::array();
                for (const auto& x : s.vertices()) v.push_back(to_json(x));
                return v;
              }()}};
  }
  return {};
}

json to_json(const BoundingBox& b) {
  return {{"lower", bound_json(b.lower)}, {"upper", bound_json(b.upper)}};
}

json to_json(const GronwallBounds& b) {
  return {{"growth_integral", b.growth_integral},
          {"K", b.K},
          {"K_bar", b.K_bar},
          {"per_jump", b.per_jump},
          {"impulse_bounds", b.impulse_bounds}};
}

json to_json(const VerificationReport& r) {
  json out{{"hypothesis", r.hypothesis},
           {"pass", r.pass},
           {"margin", r.margin},
           {"witness", {{"t", r.witness.t}, {"y", to_json(r.witness.y)}}},
           {"grid", r.grid}};
  if (r.gradient_bound) out["gradient_bound"] = *r.gradient_bound;
  return out;
}

json to_json(const MonotonicityReport& r) {
  return {{"pass", r.pass},
          {"max_slope", r.slopes ? json(r.max_slope) : json(nullptr)},
          {"threshold", r.threshold},
          {"slopes", r.slopes},
          {"surface", r.surface},
          {"witness_t", r.witness_t}};
}

json to_json(const StepControl& c) {
  return {{"h0", c.h0},     {"min_step", c.min_step}, {"max_step", c.max_step},
          {"rtol", c.rtol}, {"atol", c.atol},         {"event_tol", c.event_tol},
          {"max_steps", c.max_steps}, {"audit", c.audit}};
}

json to_json(const FunnelSample& s, bool with_members) {
  json members = json::array();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& t = s.members[i];
    const auto& prov = s.provenance[i];
    json jumps = json::array();
    for (const auto& r : t.base.jumps()) jumps.push_back({{"l", r.time}, {"v", to_json(r.jump)}});
    json m{{"index", i},
           {"strategy", prov.strategy},
           {"seed", prov.seed},
           {"level", prov.level},
           {"jumps", std::move(jumps)},
           {"missing_jumps", t.missing_jumps},
           {"final", to_json(t.path.back().y)},
           {"max_state_norm", [&t] {
              double m = 0.0;
              for (const auto& p : t.path) m = std::max(m, p.y.norm());
              return m;
            }()}};
    if (with_members) m["trajectory"] = to_json(t);
    members.push_back(std::move(m));
  }
  json distances = json::array();
  for (Eigen::Index r = 0; r < s.distances.rows(); ++r) distances.push_back(to_json(Vec(s.distances.row(r))));
  return {{"problem", s.problem}, {"count", s.size()}, {"members", std::move(members)},
          {"distances", std::move(distances)}};
}

json to_json(const CascadeReport& r) {
  json levels = json::array();
  std::vector<double> distances, radii;
  std::vector<int> ns;
  for (const auto& l : r.levels) {
    levels.push_back({{"n", l.n},
                      {"distance_to_finest", l.distance_to_finest},
                      {"kcenter_radius", l.kcenter_radius},
                      {"sample", to_json(l.sample)}});
    ns.push_back(l.n);
    distances.push_back(l.distance_to_finest);
    radii.push_back(l.kcenter_radius);
  }
  return {{"problem", r.problem},
          {"levels", ns},
          {"count", r.options.count},
          {"seed", r.options.seed},
          {"switches", r.options.switches},
          {"k", r.options.k},
          {"perturb", r.options.perturb},
          {"control", to_json(r.options.control)},
          {"distance_to_finest", distances},
          {"kcenter_radius", radii},
          {"per_level", std::move(levels)}};
}

json to_json(const ProbeReport& r) {
  json out{{"n", r.n},
           {"r_steps", r.r_steps},
           {"samples", r.samples},
           {"start_identity", r.start_identity},
           {"endpoint_identity", r.endpoint_identity},
           {"continuity_max", r.continuity_max},
           {"continuity_at_half", r.continuity_at_half},
           {"r_grid", r.r_grid},
           {"continuity", r.continuity}};
  out["containment"] = r.containment ? json(*r.containment) : json(nullptr);
  return out;
}

void write_csv(std::ostream& out, const Trajectory& t) {
  const int dim = t.base.dim();
  out << "t";
  for (int i = 1; i <= dim; ++i) out << ",y" << i;
  out << '\n';
  out.precision(17);
  for (const auto& s : t.path) {
    out << s.t;
    for (int i = 0; i < dim; ++i) out << ',' << s.y[i];
    out << '\n';
  }
}

}  // namespace pulse
