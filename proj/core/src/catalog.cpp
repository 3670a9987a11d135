#include "pulse/catalog.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "pulse/errors.hpp"

namespace pulse {
namespace {

using nlohmann::json;

Vec vec_param(const json& params, const char* key) {
  const auto values = params.at(key).get<std::vector<double>>();
  return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

double num(const json& params, const char* key) { return params.at(key).get<double>(); }

SetField::Growth constant_growth(double alpha) {
  return [alpha](double) { return alpha; };
}

ImpulseSurface constant_surface(double time, Vec jump) {
  const auto dim = jump.size();
  return {[time](const Vec&) { return time; }, [dim](const Vec&) { return Vec(Vec::Zero(dim)); },
          [jump = std::move(jump)](const Vec&) { return jump; }};
}

double positive(const json& params, const char* key) {
  const double v = num(params, key);
  if (!(v > 0.0)) throw UsageError(std::string("parameter '") + key + "' must be positive");
  return v;
}

InclusionProblem trust_funds(const json& params) {
  const double bound = positive(params, "bound");
  const double rho = positive(params, "rho");
  const double ratio = 1.0 + 1.0 / rho;
  SetField field(
      2,
      [bound](double, const Vec& y) {
        const Vec half = bound * y.cwiseAbs();
        return ConvexSet::box(-half, half);
      },
      constant_growth(bound));
  ImpulseSurface surface{
      [](const Vec& y) { return 0.5 - std::atan(y[0] + y[1]) / std::numbers::pi; },
      [](const Vec& y) {
        const double s = y[0] + y[1];
        return Vec(Vec::Constant(2, -1.0 / (std::numbers::pi * (1.0 + s * s))));
      },
      [rho, ratio](const Vec& y) {
        Vec jump(2);
        if (y[0] < 0.0 || y[1] < 0.0) {
          jump.setZero();
        } else if (ratio * y[0] < y[1]) {
          jump << -y[0], y[0];
        } else if (ratio * y[1] < y[0]) {
          jump << y[1], -y[1];
        } else {
          jump << rho * (y[0] - y[1]), rho * (y[1] - y[0]);
        }
        return jump;
      }};
  const double inf = std::numeric_limits<double>::infinity();
  return {"trust-funds",
          positive(params, "horizon"),
          vec_param(params, "y0"),
          std::move(field),
          {std::move(surface)},
          BoundingBox{Vec::Zero(2), Vec::Constant(2, inf)},
          BoundingBox{Vec::Zero(2), Vec::Constant(2, 3.0)}};
}

InclusionProblem linear_fixed(const json& params) {
  SetField field(
      1, [](double, const Vec& y) { return ConvexSet::point(-y); }, constant_growth(1.0));
  return {"linear-fixed",
          positive(params, "horizon"),
          vec_param(params, "y0"),
          std::move(field),
          {constant_surface(num(params, "tau"), Vec::Constant(1, num(params, "jump")))},
          std::nullopt,
          std::nullopt};
}

InclusionProblem tanh_two_surface(const json& params) {
  const double amplitude = num(params, "amplitude");
  const double jump = num(params, "jump");
  SetField field(
      1, [](double, const Vec&) { return ConvexSet::box(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)); },
      constant_growth(1.0));
  std::vector<ImpulseSurface> surfaces;
  for (const char* key : {"tau1", "tau2"}) {
    const double offset = num(params, key);
    surfaces.push_back(
        {[offset, amplitude](const Vec& y) { return offset + amplitude * std::tanh(y[0]); },
         [amplitude](const Vec& y) {
           const double c = std::cosh(y[0]);
           return Vec(Vec::Constant(1, amplitude / (c * c)));
         },
         [jump](const Vec&) { return Vec(Vec::Constant(1, jump)); }});
  }
  return {"tanh-two-surface", positive(params, "horizon"), vec_param(params, "y0"),
          std::move(field),   std::move(surfaces),         std::nullopt,
          std::nullopt};
}

InclusionProblem singleton_linear(const json& params) {
  const double damping = num(params, "damping");
  const double rotation = num(params, "rotation");
  const double amplitude = num(params, "amplitude");
  Eigen::Matrix2d a;
  a << -damping, rotation, -rotation, -damping;
  const double alpha = std::max(1.5, std::hypot(damping, rotation));
  SetField field(
      2, [a](double, const Vec& y) { return ConvexSet::point(a * y); }, constant_growth(alpha));
  ImpulseSurface surface{
      [amplitude](const Vec& y) {
        return 0.5 + amplitude * y[0] / std::sqrt(1.0 + y[0] * y[0]);
      },
      [amplitude](const Vec& y) {
        Vec g = Vec::Zero(2);
        g[0] = amplitude / std::pow(1.0 + y[0] * y[0], 1.5);
        return g;
      },
      [jump = vec_param(params, "jump")](const Vec&) { return jump; }};
  return {"singleton-linear",
          positive(params, "horizon"),
          vec_param(params, "y0"),
          std::move(field),
          {std::move(surface)},
          std::nullopt,
          std::nullopt};
}

InclusionProblem broken_transversality(const json& params) {
  const double radius = positive(params, "radius");
  SetField field(
      2, [radius](double, const Vec&) { return ConvexSet::ball(Vec::Zero(2), radius); },
      constant_growth(radius));
  ImpulseSurface surface{[](const Vec& y) { return 0.5 * y[0] + 0.5; },
                         [](const Vec&) {
                           Vec g = Vec::Zero(2);
                           g[0] = 0.5;
                           return g;
                         },
                         [](const Vec&) { return Vec(Vec::Zero(2)); }};
  return {"broken-transversality",
          positive(params, "horizon"),
          vec_param(params, "y0"),
          std::move(field),
          {std::move(surface)},
          std::nullopt,
          BoundingBox{Vec::Constant(2, -0.5), Vec::Constant(2, 0.5)}};
}

InclusionProblem fixed_time_m3(const json& params) {
  const double contraction = num(params, "contraction");
  SetField field(
      2, [](double, const Vec& y) { return ConvexSet::ball(-0.5 * y, 1.0); },
      constant_growth(1.0));
  std::vector<ImpulseSurface> surfaces;
  for (double time : params.at("times").get<std::vector<double>>()) {
    surfaces.push_back({[time](const Vec&) { return time; },
                        [](const Vec&) { return Vec(Vec::Zero(2)); },
                        [contraction](const Vec& y) { return Vec(-contraction * y); }});
  }
  return {"fixed-time-m3", positive(params, "horizon"), vec_param(params, "y0"),
          std::move(field), std::move(surfaces),        std::nullopt,
          std::nullopt};
}

void check_type(const json& expected, const json& given, const std::string& key) {
  const auto fail = [&key](const std::string& why) {
    throw UsageError("parameter '" + key + "': " + why);
  };
  if (expected.is_number()) {
    if (!given.is_number()) fail("expected a number");
  } else if (expected.is_array()) {
    if (!given.is_array()) fail("expected an array");
    if (given.size() != expected.size()) {
      fail("expected " + std::to_string(expected.size()) + " entries");
    }
    for (const auto& v : given) {
      if (!v.is_number()) fail("array entries must be numbers");
    }
  } else {
    fail("unsupported parameter type");
  }
}

BoundingBox parse_region(const json& region) {
  if (!region.is_object() || !region.contains("lower") || !region.contains("upper")) {
    throw UsageError("parameter 'region': expected {\"lower\": [...], \"upper\": [...]}");
  }
  std::vector<double> lo, hi;
  try {
    lo = region.at("lower").get<std::vector<double>>();
    hi = region.at("upper").get<std::vector<double>>();
  } catch (const json::exception&) {
    throw UsageError("parameter 'region': bounds must be numeric arrays");
  }
  if (lo.size() != hi.size() || lo.empty()) {
    throw UsageError("parameter 'region': bounds must have equal, positive length");
  }
  BoundingBox box{Eigen::Map<const Vec>(lo.data(), static_cast<Eigen::Index>(lo.size())),
                  Eigen::Map<const Vec>(hi.data(), static_cast<Eigen::Index>(hi.size()))};
  if ((box.lower.array() > box.upper.array()).any()) {
    throw UsageError("parameter 'region': lower exceeds upper");
  }
  return box;
}

}  // namespace

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries{
      {"trust-funds",
       "two trust funds with one state-dependent transfer (field [-6|y1|,6|y1|] x "
       "[-6|y2|,6|y2|], tau = arccot(y1 + y2)/pi)",
       {{"horizon", 1.0}, {"y0", {0.5, 0.5}}, {"rho", 0.5}, {"bound", 6.0}},
       trust_funds},
      {"linear-fixed",
       "y' = -y with a unit jump at the constant time tau",
       {{"horizon", 1.0}, {"y0", {1.0}}, {"tau", 0.5}, {"jump", 1.0}},
       linear_fixed},
      {"tanh-two-surface",
       "scalar field [-1,1] with surfaces tau_j = c_j + 0.1 tanh(y) and jumps -0.5",
       {{"horizon", 1.0},
        {"y0", {0.0}},
        {"tau1", 0.25},
        {"tau2", 0.6},
        {"amplitude", 0.1},
        {"jump", -0.5}},
       tanh_two_surface},
      {"singleton-linear",
       "damped rotation y' = A y with one weakly state-dependent surface",
       {{"horizon", 1.0},
        {"y0", {1.0, 0.0}},
        {"damping", 0.5},
        {"rotation", 1.0},
        {"amplitude", 0.02},
        {"jump", {0.0, 0.5}}},
       singleton_linear},
      {"broken-transversality",
       "ball(0, 2) with tau = y1/2 + 1/2: the transversality margin is exactly zero",
       {{"horizon", 1.0}, {"y0", {0.0, 0.0}}, {"radius", 2.0}},
       broken_transversality},
      {"fixed-time-m3",
       "ball(-y/2, 1) with three fixed-time contractions",
       {{"horizon", 1.0},
        {"y0", {1.0, 1.0}},
        {"times", {0.25, 0.5, 0.75}},
        {"contraction", 0.5}},
       fixed_time_m3},
  };
  return entries;
}

const CatalogEntry& catalog_entry(std::string_view name) {
  for (const auto& e : catalog()) {
    if (e.name == name) return e;
  }
  std::string known;
  for (const auto& e : catalog()) known += (known.empty() ? "" : ", ") + e.name;
  throw UsageError("unknown problem '" + std::string(name) + "' (known: " + known + ")");
}

json resolve_params(const CatalogEntry& entry, const json& overrides) {
  if (!overrides.is_null() && !overrides.is_object()) {
    throw UsageError("parameter overrides must be a JSON object");
  }
  json params = entry.defaults;
  if (overrides.is_null()) return params;
  for (const auto& [key, value] : overrides.items()) {
    if (key == "region") {
      parse_region(value);
      params[key] = value;
      continue;
    }
    if (!entry.defaults.contains(key)) {
      throw UsageError("problem '" + entry.name + "' has no parameter '" + key + "'");
    }
    check_type(entry.defaults.at(key), value, key);
    params[key] = value;
  }
  return params;
}

InclusionProblem make_problem(std::string_view name, const json& overrides) {
  const auto& entry = catalog_entry(name);
  const json params = resolve_params(entry, overrides);
  InclusionProblem p = entry.build(params);
  if (params.contains("region")) {
    BoundingBox box = parse_region(params.at("region"));
    if (box.dim() != p.dim()) throw UsageError("parameter 'region': wrong dimension");
    p.verification_region = std::move(box);
  }
  p.validate();
  return p;
}

}  // namespace pulse
