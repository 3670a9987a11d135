#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pulse/catalog.hpp"
#include "pulse/errors.hpp"
#include "pulse/funnel.hpp"
#include "pulse/integrator.hpp"
#include "pulse/problem.hpp"
#include "pulse/serialize.hpp"

namespace pulse::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  std::string problem;
  std::vector<std::string> params;
  std::vector<std::string> selections;
  std::uint64_t seed = 0;
  std::string levels = "4,8,16,32";
  std::size_t count = 0;
  std::size_t r_steps = 64;
  std::string grid = "64x8";
  std::string out;
  std::string csv;
  double tol_rel = StepControl{}.rtol;
  double tol_abs = StepControl{}.atol;
  double tol_event = StepControl{}.event_tol;
  int n = 16;
  std::size_t samples = 20;
  int switches = 3;
  std::size_t k = 5;
  bool containment = false;
  bool no_perturb = false;
};

// Raised when the initial state lies outside the problem's validity box.
struct ValidityGuard : Error {
  using Error::Error;
};

json parse_params(const std::vector<std::string>& items) {
  json overrides = json::object();
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError("--param expects key=value, got '" + item + "'");
    }
    const std::string key = item.substr(0, eq);
    json value = json::parse(item.substr(eq + 1), nullptr, false);
    if (value.is_discarded()) {
      throw UsageError("--param " + key + ": value is not valid JSON");
    }
    overrides[key] = std::move(value);
  }
  return overrides;
}

StepControl control_from(const Options& o) {
  StepControl c;
  c.rtol = o.tol_rel;
  c.atol = o.tol_abs;
  c.event_tol = o.tol_event;
  try {
    c.validate();
  } catch (const ContractViolation& e) {
    throw UsageError(e.what());
  }
  return c;
}

GridSpec grid_from(const std::string& text) {
  GridSpec g;
  const auto x = text.find('x');
  try {
    std::size_t used = 0;
    g.space_points = std::stoi(text.substr(0, x), &used);
    if (used != (x == std::string::npos ? text.size() : x)) throw std::invalid_argument(text);
    if (x != std::string::npos) {
      const std::string t = text.substr(x + 1);
      g.time_points = std::stoi(t, &used);
      if (used != t.size()) throw std::invalid_argument(text);
    }
  } catch (const std::logic_error&) {
    throw UsageError("--grid expects S or SxT, got '" + text + "'");
  }
  if (g.space_points < 1 || g.time_points < 1) throw UsageError("--grid entries must be >= 1");
  return g;
}

std::vector<int> levels_from(const std::string& text) {
  std::vector<int> levels;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      levels.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw UsageError("--levels expects comma-separated integers, got '" + text + "'");
    }
  }
  if (levels.empty()) throw UsageError("--levels is empty");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 1 || (i > 0 && levels[i] <= levels[i - 1])) {
      throw UsageError("--levels must be strictly ascending positive integers, got '" + text + "'");
    }
  }
  return levels;
}

void guard_validity(const InclusionProblem& p) {
  if (p.validity && !p.validity->contains(p.y0)) {
    throw ValidityGuard("initial state lies outside the validity region declared by '" + p.name +
                        "'");
  }
}

// Writes to a temporary sibling and renames it into place.
void write_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open '" + tmp.string() + "' for writing");
    f << content;
    if (!f.flush()) throw Error("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error("cannot move output into '" + path + "'");
  }
}

void emit(const Options& o, const json& doc, std::ostream& out) {
  const std::string text = doc.dump(2) + "\n";
  if (o.out.empty()) {
    out << text;
  } else {
    write_atomic(o.out, text);
  }
}

json header(const Options& o, const std::string& command, const InclusionProblem& p) {
  return {{"command", command},
          {"problem", p.name},
          {"params", resolve_params(catalog_entry(o.problem), parse_params(o.params))},
          {"seed", o.seed}};
}

int cmd_solve(const Options& o, std::ostream& out) {
  const auto p = make_problem(o.problem, parse_params(o.params));
  const std::string name = o.selections.empty() ? "center" : o.selections.front();
  const auto strategy = Strategy::parse(name, p.dim());
  const auto control = control_from(o);
  guard_validity(p);
  const auto bounds = gronwall_bounds(p);
  const auto traj = solve(p, make_selection(p, strategy, o.seed, bounds), control);
  json doc = header(o, "solve", p);
  doc["selection"] = strategy.text;
  doc["control"] = to_json(control);
  doc["gronwall"] = to_json(bounds);
  doc["trajectory"] = to_json(traj);
  emit(o, doc, out);
  if (!o.csv.empty()) {
    std::ostringstream table;
    write_csv(table, traj);
    write_atomic(o.csv, table.str());
  }
  return kSuccess;
}

int cmd_verify(const Options& o, std::ostream& out) {
  const auto p = make_problem(o.problem, parse_params(o.params));
  const auto grid = grid_from(o.grid);
  json doc = header(o, "verify", p);
  doc["gronwall"] = to_json(gronwall_bounds(p));
  json reports = json::array();
  bool pass = true;
  for (const auto& check : {check_growth, check_surfaces, check_transversality}) {
    const auto r = check(p, grid);
    pass = pass && r.pass;
    reports.push_back(to_json(r));
  }
  doc["reports"] = std::move(reports);
  doc["pass"] = pass;
  emit(o, doc, out);
  return pass ? kSuccess : kHypothesisViolation;
}

int cmd_funnel(const Options& o, std::ostream& out) {
  const auto p = make_problem(o.problem, parse_params(o.params));
  std::vector<Strategy> strategies;
  for (const auto& s : o.selections.empty() ? std::vector<std::string>{"bangbang:3"} : o.selections) {
    strategies.push_back(Strategy::parse(s, p.dim()));
  }
  const auto control = control_from(o);
  guard_validity(p);
  const std::size_t count = o.count == 0 ? 10 : o.count;
  const auto sample = sample_funnel(p, strategies, count, o.seed, control);
  json doc = header(o, "funnel", p);
  doc["control"] = to_json(control);
  doc["sample"] = to_json(sample, true);
  double widest = 0.0;
  if (sample.size() > 1) widest = sample.distances.maxCoeff();
  doc["max_pairwise_distance"] = widest;
  emit(o, doc, out);
  if (!o.csv.empty()) {
    fs::create_directories(o.csv);
    for (std::size_t i = 0; i < sample.size(); ++i) {
      std::ostringstream table;
      write_csv(table, sample.members[i]);
      write_atomic((fs::path(o.csv) / ("member_" + std::to_string(i) + ".csv")).string(),
                   table.str());
    }
  }
  return kSuccess;
}

int cmd_cascade(const Options& o, std::ostream& out) {
  const auto p = make_problem(o.problem, parse_params(o.params));
  CascadeOptions c;
  c.levels = levels_from(o.levels);
  c.count = o.count == 0 ? 32 : o.count;
  c.seed = o.seed;
  c.switches = o.switches;
  c.k = o.k;
  c.perturb = !o.no_perturb;
  c.control = control_from(o);
  guard_validity(p);
  const auto report = approximation_cascade(p, c);
  json doc = header(o, "cascade", p);
  doc["cascade"] = to_json(report);
  emit(o, doc, out);
  return kSuccess;
}

int cmd_contract(const Options& o, std::ostream& out) {
  const auto p = make_problem(o.problem, parse_params(o.params));
  if (o.n < 1) throw UsageError("--n must be >= 1");
  if (o.r_steps < 2 || o.r_steps % 2) throw UsageError("--r-steps must be even and >= 2");
  CascadeOptions c;
  c.count = o.samples;
  c.seed = o.seed;
  c.switches = o.switches;
  c.control = control_from(o);
  c.perturb = !o.no_perturb;
  guard_validity(p);
  const auto sample = level_family(p, o.n, c, gronwall_bounds(p));
  ProbeOptions probe;
  probe.r_steps = o.r_steps;
  probe.containment = o.containment;
  probe.control = c.control;
  const auto report = contractibility_probe(p, o.n, sample, probe);
  json doc = header(o, "contract", p);
  doc["sample"] = to_json(sample);
  doc["probe"] = to_json(report);
  emit(o, doc, out);
  return kSuccess;
}

void add_common(CLI::App& sub, Options& o) {
  sub.add_option("--problem", o.problem, "Catalog problem name")->required();
  sub.add_option("--param", o.params, "Parameter override key=<json> (repeatable)");
  sub.add_option("--seed", o.seed, "Master seed");
  sub.add_option("--out", o.out, "Output file (stdout when omitted)");
}

void add_tolerances(CLI::App& sub, Options& o) {
  sub.add_option("--tol-rel", o.tol_rel, "Relative step tolerance");
  sub.add_option("--tol-abs", o.tol_abs, "Absolute step tolerance");
  sub.add_option("--tol-event", o.tol_event, "Event time tolerance");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Impulsive differential inclusions: solve, verify and sample solution funnels",
               "pulse"};
  app.require_subcommand(1);
  Options o;

  auto* solve_cmd = app.add_subcommand("solve", "Solve under one selection");
  add_common(*solve_cmd, o);
  add_tolerances(*solve_cmd, o);
  solve_cmd->add_option("--selection", o.selections,
                        "zero | center | extreme:<d> | bangbang:<k> | mollified:<n>")
      ->expected(1);
  solve_cmd->add_option("--csv", o.csv, "Also write a (t, y) table to this file");

  auto* verify_cmd = app.add_subcommand("verify", "Check the growth, surface and transversality hypotheses");
  add_common(*verify_cmd, o);
  verify_cmd->add_option("--grid", o.grid, "Grid resolution S or SxT (space per axis x time)");

  auto* funnel_cmd = app.add_subcommand("funnel", "Sample the solution funnel");
  add_common(*funnel_cmd, o);
  add_tolerances(*funnel_cmd, o);
  funnel_cmd->add_option("--selection", o.selections, "Strategies, cycled over members (repeatable)");
  funnel_cmd->add_option("--count", o.count, "Number of members (default 10)");
  funnel_cmd->add_option("--csv", o.csv, "Directory for per-member (t, y) tables");

  auto* cascade_cmd = app.add_subcommand("cascade", "Approximation cascade over mollification levels");
  add_common(*cascade_cmd, o);
  add_tolerances(*cascade_cmd, o);
  cascade_cmd->add_option("--levels", o.levels, "Comma-separated ascending levels");
  cascade_cmd->add_option("--count", o.count, "Members per level (default 32)");
  cascade_cmd->add_option("--switches", o.switches, "Switches of the bang-bang schedules");
  cascade_cmd->add_option("--k", o.k, "Centers for the k-center radius");
  cascade_cmd->add_flag("--no-perturb", o.no_perturb, "Disable the 1/n step towards an extreme point");

  auto* contract_cmd = app.add_subcommand("contract", "Contraction homotopy probe");
  add_common(*contract_cmd, o);
  add_tolerances(*contract_cmd, o);
  contract_cmd->add_option("--n", o.n, "Mollification level");
  contract_cmd->add_option("--samples", o.samples, "Number of ybar trajectories");
  contract_cmd->add_option("--r-steps", o.r_steps, "Intervals of the r grid (even)");
  contract_cmd->add_option("--switches", o.switches, "Switches of the bang-bang schedules");
  contract_cmd->add_flag("--containment", o.containment, "Report distance of h(r, ybar) to the sample");
  contract_cmd->add_flag("--no-perturb", o.no_perturb, "Disable the 1/n step towards an extreme point");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    if (*solve_cmd) return cmd_solve(o, out);
    if (*verify_cmd) return cmd_verify(o, out);
    if (*funnel_cmd) return cmd_funnel(o, out);
    if (*cascade_cmd) return cmd_cascade(o, out);
    if (*contract_cmd) return cmd_contract(o, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ValidityGuard& e) {
    err << "hypothesis violation: " << e.what() << "\n";
    return kHypothesisViolation;
  } catch (const SurfaceRevisit& e) {
    err << "hypothesis violation: " << e.what() << "\n";
    return kHypothesisViolation;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kUsage;
}

}  // namespace pulse::cli
