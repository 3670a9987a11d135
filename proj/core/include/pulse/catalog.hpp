#pragma once

// Registered example problems with JSON parameter overrides.

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pulse/problem.hpp"

namespace pulse {

struct CatalogEntry {
  std::string name;
  std::string summary;
  /// Parameter schema and defaults. Overrides must use these keys and match
  /// the type (and array length) of the default.
  nlohmann::json defaults;
  std::function<InclusionProblem(const nlohmann::json&)> build;
};

const std::vector<CatalogEntry>& catalog();

/// Throws UsageError for unknown names.
const CatalogEntry& catalog_entry(std::string_view name);

/// Defaults with `overrides` applied. Besides the schema keys every entry
/// accepts "region": {"lower": [...], "upper": [...]}, which replaces the
/// verification region. Throws UsageError on unknown keys or type mismatch.
nlohmann::json resolve_params(const CatalogEntry& entry, const nlohmann::json& overrides);

InclusionProblem make_problem(std::string_view name,
                              const nlohmann::json& overrides = nlohmann::json::object());

}  // namespace pulse
