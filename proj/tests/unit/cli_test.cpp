#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"

namespace pulse::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "pulse");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "pulse-cli-test";
  fs::create_directories(dir);
  return dir / name;
}

TEST(Cli, SolveTrustFundsZero) {
  const auto r = invoke({"solve", "--problem", "trust-funds", "--selection", "zero"});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  const auto doc = json::parse(r.out);
  ASSERT_EQ(doc["trajectory"]["events"].size(), 1u);
  EXPECT_NEAR(doc["trajectory"]["events"][0]["t"].get<double>(), 0.25, 1e-10);
}

TEST(Cli, SolveLinearFixed) {
  const auto csv = scratch("linear.csv");
  const auto r = invoke({"solve", "--problem", "linear-fixed", "--selection", "center", "--csv",
                         csv.string()});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  const auto values = json::parse(r.out)["trajectory"]["values"];
  // values hold the continuous part; the jump at 0.5 is added back for y(1)
  const auto jumps = json::parse(r.out)["trajectory"]["jumps"];
  ASSERT_EQ(jumps.size(), 1u);
  EXPECT_NEAR(values.back()[0].get<double>() + jumps[0]["v"][0].get<double>(),
              std::exp(-1.0) + std::exp(-0.5), 1e-8);
  EXPECT_EQ(slurp(csv).substr(0, 5), "t,y1\n");
}

TEST(Cli, ValidityGuard) {
  const auto r = invoke({"solve", "--problem", "trust-funds", "--selection", "extreme:-1,-1",
                         "--param", "y0=[-1,-1]"});
  EXPECT_EQ(r.code, kHypothesisViolation);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({"solve", "--problem", "nope"}).code, kUsage);
  EXPECT_EQ(invoke({"solve", "--problem", "trust-funds", "--selection", "sideways"}).code, kUsage);
  EXPECT_EQ(invoke({"solve", "--problem", "trust-funds", "--param", "rho"}).code, kUsage);
  EXPECT_EQ(invoke({"solve", "--problem", "trust-funds", "--param", "rho=\"a\""}).code, kUsage);
  EXPECT_EQ(invoke({"solve"}).code, kUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, kUsage);
  EXPECT_EQ(invoke({"cascade", "--problem", "trust-funds", "--levels", "8,4"}).code, kUsage);
  EXPECT_EQ(invoke({"solve", "--problem", "linear-fixed", "--tol-rel", "-1"}).code, kUsage);
}

TEST(Cli, RuntimeFailure) {
  const auto r = invoke({"solve", "--problem", "linear-fixed", "--tol-rel", "1e-300", "--tol-abs",
                         "1e-300"});
  EXPECT_EQ(r.code, kRuntimeFailure) << r.err;
}

TEST(Cli, VerifyReports) {
  auto r = invoke({"verify", "--problem", "trust-funds", "--grid", "64"});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  auto doc = json::parse(r.out);
  EXPECT_TRUE(doc["pass"].get<bool>());
  EXPECT_EQ(doc["reports"][2]["hypothesis"], "H3");
  EXPECT_NEAR(doc["reports"][2]["margin"].get<double>(), 1 - 3 / M_PI, 5e-3);

  r = invoke({"verify", "--problem", "tanh-two-surface"});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  doc = json::parse(r.out);
  EXPECT_NEAR(doc["reports"][1]["gradient_bound"].get<double>(), 0.1, 1e-12);

  r = invoke({"verify", "--problem", "broken-transversality"});
  EXPECT_NE(r.code, kSuccess);
  doc = json::parse(r.out);
  EXPECT_NEAR(doc["reports"][2]["margin"].get<double>(), 0.0, 1e-15);
}

TEST(Cli, FunnelSingletonCollapses) {
  const auto r = invoke({"funnel", "--problem", "singleton-linear", "--count", "10"});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  EXPECT_LE(json::parse(r.out)["max_pairwise_distance"].get<double>(), 2e-9);
}

TEST(Cli, IdenticalCommandsWriteIdenticalFiles) {
  const auto a = scratch("funnel-a.json");
  const auto b = scratch("funnel-b.json");
  for (const auto& target : {a, b}) {
    const auto r = invoke({"funnel", "--problem", "fixed-time-m3", "--count", "8", "--seed", "5",
                           "--out", target.string()});
    ASSERT_EQ(r.code, kSuccess) << r.err;
    EXPECT_TRUE(r.out.empty());
  }
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_FALSE(fs::exists(a.string() + ".tmp"));
}

TEST(Cli, FunnelCsvDirectory) {
  const auto dir = scratch("funnel-csv");
  fs::remove_all(dir);
  const auto r = invoke({"funnel", "--problem", "trust-funds", "--count", "3", "--csv", dir.string()});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(fs::exists(dir / ("member_" + std::to_string(i) + ".csv")));
}

TEST(Cli, SmallCascadeAndContract) {
  auto r = invoke({"cascade", "--problem", "trust-funds", "--levels", "2,4", "--count", "4"});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  EXPECT_EQ(json::parse(r.out)["cascade"]["distance_to_finest"].size(), 2u);
  r = invoke({"contract", "--problem", "trust-funds", "--n", "4", "--samples", "3", "--r-steps", "4"});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  EXPECT_LE(json::parse(r.out)["probe"]["endpoint_identity"].get<double>(), 1e-6);
  EXPECT_EQ(invoke({"contract", "--problem", "trust-funds", "--r-steps", "3"}).code, kUsage);
}

}  // namespace
}  // namespace pulse::cli
