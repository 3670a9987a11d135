#include <gtest/gtest.h>

#include <sstream>

#include "pulse/catalog.hpp"
#include "pulse/errors.hpp"
#include "pulse/integrator.hpp"
#include "pulse/serialize.hpp"

namespace pulse {
namespace {

using nlohmann::json;

TEST(Catalog, ShipsTheDocumentedProblems) {
  std::vector<std::string> names;
  for (const auto& e : catalog()) names.push_back(e.name);
  const std::vector<std::string> expected{"trust-funds",      "linear-fixed",
                                          "tanh-two-surface", "singleton-linear",
                                          "broken-transversality", "fixed-time-m3"};
  EXPECT_EQ(names, expected);
  for (const auto& e : catalog()) EXPECT_NO_THROW(make_problem(e.name).validate()) << e.name;
  EXPECT_THROW(catalog_entry("nope"), UsageError);
}

TEST(Catalog, OverridesAreTypeChecked) {
  const auto& e = catalog_entry("trust-funds");
  EXPECT_EQ(resolve_params(e, json{{"rho", 0.25}})["rho"], 0.25);
  EXPECT_THROW(resolve_params(e, json{{"unknown", 1}}), UsageError);
  EXPECT_THROW(resolve_params(e, json{{"rho", "x"}}), UsageError);
  EXPECT_THROW(resolve_params(e, json{{"y0", {1.0}}}), UsageError);
  EXPECT_THROW(resolve_params(e, json{{"y0", 3.0}}), UsageError);
  const auto p = make_problem("trust-funds", json{{"y0", {1.0, 2.0}}});
  EXPECT_EQ(p.y0[1], 2.0);
}

TEST(Catalog, RegionOverride) {
  const auto p = make_problem(
      "linear-fixed", json{{"region", {{"lower", {-0.5}}, {"upper", {0.5}}}}});
  ASSERT_TRUE(p.verification_region);
  EXPECT_EQ(p.verification_region->upper[0], 0.5);
  EXPECT_THROW(make_problem("linear-fixed", json{{"region", {{"lower", {1.0}}, {"upper", {0.0}}}}}),
               UsageError);
}

TEST(Serialize, TrajectoryCarriesEvents) {
  const auto p = make_problem("tanh-two-surface");
  const auto t = solve(p, select_zero(p.field));
  const auto j = to_json(t);
  ASSERT_EQ(j["events"].size(), 2u);
  for (const char* key : {"surface", "t", "pre", "post"}) EXPECT_TRUE(j["events"][0].contains(key));
  EXPECT_EQ(j["jumps"].size(), 2u);
  const auto back = jump_function_from_json(j);
  EXPECT_EQ(distance(back, t.base), 0.0);
}

TEST(Serialize, CsvHasOneRowPerSample) {
  const auto p = make_problem("singleton-linear");
  const auto t = solve(p, select_center(p.field));
  std::ostringstream out;
  write_csv(out, t);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,y1,y2");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, t.path.size());
}

TEST(Serialize, VerificationReportShape) {
  VerificationReport r{"H3", true, 0.045, {0.0, Vec::Ones(2)}, json::object(), std::nullopt};
  const auto j = to_json(r);
  EXPECT_EQ(j["hypothesis"], "H3");
  EXPECT_EQ(j["witness"]["y"].size(), 2u);
  EXPECT_FALSE(j.contains("gradient_bound"));
}

TEST(Serialize, MalformedJumpFunctionJson) {
  EXPECT_THROW(jump_function_from_json(json{{"horizon", 1.0}}), ContractViolation);
}

}  // namespace
}  // namespace pulse
