#pragma once

// JSON and CSV encodings of library values. Output never contains
// timestamps, so equal inputs give byte-identical documents.

#include <ostream>

#include <nlohmann/json.hpp>

#include "pulse/fields.hpp"
#include "pulse/funnel.hpp"
#include "pulse/integrator.hpp"
#include "pulse/jumpspace.hpp"
#include "pulse/problem.hpp"

namespace pulse {

nlohmann::json to_json(const Vec& v);
Vec vec_from_json(const nlohmann::json& j);

/// {"horizon", "dim", "grid", "values", "slopes_in", "slopes_out",
///  "jumps": [{"l", "v"}]}; values are node-major.
nlohmann::json to_json(const JumpFunction& f);
JumpFunction jump_function_from_json(const nlohmann::json& j);

/// Base function plus "events": [{"surface", "t", "pre", "post"}].
nlohmann::json to_json(const Trajectory& t);
nlohmann::json to_json(const ConvexSet& s);
nlohmann::json to_json(const BoundingBox& b);
nlohmann::json to_json(const GronwallBounds& b);
nlohmann::json to_json(const VerificationReport& r);
nlohmann::json to_json(const MonotonicityReport& r);
nlohmann::json to_json(const StepControl& c);

/// Manifest of a sample: provenance, jump records and the distance matrix.
/// With `with_members` the full base functions are included.
nlohmann::json to_json(const FunnelSample& s, bool with_members = false);
nlohmann::json to_json(const CascadeReport& r);
nlohmann::json to_json(const ProbeReport& r);

/// Flat table with header "t,y1,...,yN" and one row per path sample (jumps
/// appear as two rows with the same t).
void write_csv(std::ostream& out, const Trajectory& t);

}  // namespace pulse
