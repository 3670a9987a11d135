#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "pulse/catalog.hpp"
#include "pulse/errors.hpp"
#include "pulse/funnel.hpp"
#include "pulse/integrator.hpp"
#include "pulse/problem.hpp"

namespace pulse {
namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

ImpulseSurface constant_surface(double time, const Vec& jump) {
  const auto dim = jump.size();
  return {[time](const Vec&) { return time; }, [dim](const Vec&) { return Vec(Vec::Zero(dim)); },
          [jump](const Vec&) { return jump; }};
}

InclusionProblem make(SetField field, std::vector<ImpulseSurface> surfaces, const Vec& y0,
                      std::optional<BoundingBox> region = std::nullopt) {
  return {"test", 1.0, y0, std::move(field), std::move(surfaces), std::nullopt, std::move(region)};
}

SetField growth_field(std::function<ConvexSet(const Vec&)> value, double alpha) {
  return SetField(
      2, [value](double, const Vec& y) { return value(y); }, [alpha](double) { return alpha; });
}

TEST(Gronwall, NoJumpsUnitGrowth) {
  const auto p = make(growth_field([](const Vec&) { return ConvexSet::point(v2(0, 0)); }, 1.0), {},
                      v2(1, 0));
  const auto b = gronwall_bounds(p);
  EXPECT_NEAR(b.growth_integral, 1.0, 1e-12);
  EXPECT_NEAR(b.K, 3.0 * std::exp(1.0), 1e-9);
  EXPECT_NEAR(b.K_bar, b.K, 1e-12);
  EXPECT_TRUE(b.per_jump.empty());
}

TEST(Gronwall, ZeroGrowthAddsImpulseBounds) {
  const auto p = make(growth_field([](const Vec&) { return ConvexSet::point(v2(0, 0)); }, 0.0),
                      {constant_surface(0.3, v2(3, 4)), constant_surface(0.6, v2(0, 2))}, v2(0, 1));
  const auto b = gronwall_bounds(p);
  EXPECT_EQ(b.K, 1.0);
  ASSERT_EQ(b.per_jump.size(), 2u);
  EXPECT_NEAR(b.impulse_bounds[0], 5.0, 1e-12);
  EXPECT_NEAR(b.impulse_bounds[1], 2.0, 1e-12);
  EXPECT_NEAR(b.per_jump[0], 6.0, 1e-12);
  EXPECT_NEAR(b.per_jump[1], 8.0, 1e-12);
  EXPECT_EQ(b.K_bar, b.per_jump.back());
}

TEST(Gronwall, NonFiniteGrowthIsQuadratureFailure) {
  const SetField field(
      1, [](double, const Vec&) { return ConvexSet::point(Vec::Zero(1)); },
      [](double t) { return t > 0.5 ? std::numeric_limits<double>::infinity() : 1.0; });
  EXPECT_THROW(gronwall_bounds(make(field, {}, Vec::Zero(1))), QuadratureFailure);
}

TEST(Gronwall, TrustFundsEnvelopeHoldsOnSolvedTrajectories) {
  const auto p = make_problem("trust-funds");
  const auto b = gronwall_bounds(p);
  ASSERT_TRUE(std::isfinite(b.K_bar));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = solve(p, select_random(p.field, p.horizon, seed, 3));
    for (const auto& s : t.path) EXPECT_LE(s.y.norm(), b.K_bar + 1e-6);
  }
}

TEST(CheckGrowth, SingletonZeroField) {
  const auto p = make(growth_field([](const Vec&) { return ConvexSet::point(v2(0, 0)); }, 1.0), {},
                      v2(1, 0));
  const auto r = check_growth(p);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.margin, 1.0, 1e-12);  // the grid contains y = 0
  EXPECT_EQ(r.hypothesis, "F3");
}

TEST(CheckGrowth, OversizedBallFails) {
  const auto p = make(
      growth_field([](const Vec& y) { return ConvexSet::ball(v2(0, 0), 2 + 2 * y.norm()); }, 1.0),
      {}, v2(0, 0));
  GridSpec grid;
  grid.region = BoundingBox{v2(-0.01, -0.01), v2(0.01, 0.01)};
  const auto near_origin = check_growth(p, grid);
  EXPECT_FALSE(near_origin.pass);
  EXPECT_NEAR(near_origin.margin, -1.0, 0.02);
  const auto whole = check_growth(p);
  EXPECT_FALSE(whole.pass);
  EXPECT_LT(whole.margin, -1.0);
}

TEST(CheckGrowth, TrustFundsPassesOnQuadrant) {
  const auto p = make_problem("trust-funds");
  const auto r = check_growth(p);
  EXPECT_TRUE(r.pass);
  // Oracle: 6 (1 + |y|) - 6 |y| over the grid, smallest at the far corner is 6.
  double oracle = std::numeric_limits<double>::infinity();
  for (const auto& y : spatial_grid(verification_region(p, {}), 64)) {
    oracle = std::min(oracle, 6 * (1 + y.norm()) - 6 * y.norm());
  }
  EXPECT_NEAR(r.margin, oracle, 1e-9);
}

TEST(CheckSurfaces, ConstantSurfaces) {
  const auto p = make(growth_field([](const Vec&) { return ConvexSet::point(v2(0, 0)); }, 1.0),
                      {constant_surface(0.3, v2(1, 0)), constant_surface(0.6, v2(0, -5))}, v2(0, 0));
  const auto r = check_surfaces(p);
  EXPECT_TRUE(r.pass);
  ASSERT_TRUE(r.gradient_bound);
  EXPECT_EQ(*r.gradient_bound, 0.0);
  EXPECT_NEAR(r.margin, 0.0, 1e-15);  // 0.3 <= 0.3
}

TEST(CheckSurfaces, TanhTwoSurface) {
  const auto r = check_surfaces(make_problem("tanh-two-surface"));
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(*r.gradient_bound, 0.1, 1e-12);
}

TEST(CheckSurfaces, TrustFundsHasEqualitySlack) {
  const auto r = check_surfaces(make_problem("trust-funds"));
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.margin, 0.0, 1e-12);
}

TEST(CheckSurfaces, DetectsOrderingViolation) {
  const auto p = make(growth_field([](const Vec&) { return ConvexSet::point(v2(0, 0)); }, 1.0),
                      {constant_surface(0.6, v2(1, 0)), constant_surface(0.3, v2(0, 1))}, v2(0, 0));
  const auto r = check_surfaces(p);
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.margin, -0.3, 1e-12);
}

TEST(CheckTransversality, FixedTimeSurfaces) {
  const auto r = check_transversality(make_problem("fixed-time-m3"));
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.margin, 1.0);
}

TEST(CheckTransversality, TrustFundsMargin) {
  GridSpec grid;
  grid.region = BoundingBox{v2(0, 0), v2(3, 3)};
  const auto r = check_transversality(make_problem("trust-funds"), grid);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.margin, oracle::trust_funds_margin(), 5e-3);
  EXPECT_GE(r.margin, oracle::trust_funds_margin() - 1e-12);
  EXPECT_NEAR(r.witness.y.sum(), 1.0, 0.05);
}

TEST(CheckTransversality, BrokenTransversalityIsBoundary) {
  const auto r = check_transversality(make_problem("broken-transversality"));
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.margin, 0.0, 1e-15);
}

TEST(CheckTransversality, RefinementNeverRaisesMargin) {
  const auto p = make_problem("trust-funds");
  double previous = std::numeric_limits<double>::infinity();
  for (int points : {8, 16, 32, 64, 128}) {
    GridSpec grid;
    grid.space_points = points;
    const double m = check_transversality(p, grid).margin;
    EXPECT_LE(m, previous + 1e-15) << points;
    previous = m;
  }
}

TEST(CheckTransversality, SupportDominatesSelections) {
  const auto p = make_problem("trust-funds");
  GridSpec grid;
  grid.region = BoundingBox{v2(0, 0), v2(2, 2)};  // s = 1 is a node
  const double p_hat = check_transversality(p, grid).margin;
  EXPECT_NEAR(p_hat, oracle::trust_funds_margin(), 1e-12);
  StepControl ctl;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = solve(p, select_random(p.field, p.horizon, seed, 3), ctl);
    for (std::size_t k = 0; k < t.path.size(); ++k) {
      const Vec& y = t.path[k].y;
      const double w = p.surfaces[0].tau_grad(y).dot(t.selection_trace[k].value) - 1.0;
      EXPECT_LE(w, -p_hat + 1e-9);
    }
  }
}

TEST(Surfaces, GradientsMatchFiniteDifferences) {
  Rng rng(21);
  for (const auto& entry : catalog()) {
    const auto p = make_problem(entry.name);
    const auto region = verification_region(p, {});
    for (int trial = 0; trial < 50; ++trial) {
      Vec y(p.dim());
      for (int i = 0; i < p.dim(); ++i) y[i] = rng.uniform(region.box.lower[i], region.box.upper[i]);
      for (const auto& s : p.surfaces) {
        const Vec g = s.tau_grad(y);
        Vec fd(p.dim());
        for (int i = 0; i < p.dim(); ++i) {
          const double h = 1e-6 * (1 + std::abs(y[i]));
          Vec up = y, down = y;
          up[i] += h;
          down[i] -= h;
          fd[i] = (s.tau(up) - s.tau(down)) / (2 * h);
        }
        EXPECT_LE((g - fd).norm(), 1e-5 * std::max(1e-3, g.norm()) + 1e-9) << entry.name;
      }
    }
  }
}

TEST(Surfaces, TauInsideHorizonOnVerificationRegion) {
  for (const auto& entry : catalog()) {
    const auto p = make_problem(entry.name);
    for (const auto& y : spatial_grid(verification_region(p, {}), 16)) {
      for (const auto& s : p.surfaces) {
        EXPECT_GT(s.tau(y), 0.0) << entry.name;
        EXPECT_LT(s.tau(y), p.horizon) << entry.name;
      }
    }
  }
}

TEST(VerificationRegion, DefaultsAndGrid) {
  const auto p = make_problem("linear-fixed");
  const auto b = gronwall_bounds(p);
  const auto region = verification_region(p, {});
  ASSERT_TRUE(region.ball_radius);
  EXPECT_NEAR(*region.ball_radius, b.K_bar + 1, 1e-12);
  const auto points = spatial_grid(region, 10);
  EXPECT_EQ(points.size(), 11u);
  bool has_center = false;
  for (const auto& y : points) has_center |= y.norm() == 0.0;
  EXPECT_TRUE(has_center);
}

}  // namespace
}  // namespace pulse
