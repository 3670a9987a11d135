#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "pulse/errors.hpp"
#include "pulse/jumpspace.hpp"
#include "pulse/serialize.hpp"

namespace pulse {
namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec v1(double a) { return Vec::Constant(1, a); }

JumpFunction identity_ramp(std::vector<JumpRecord> jumps) {
  // phi(t) = (t, 0) on [0, 1]
  return JumpFunction(1.0, {0.0, 1.0}, {v2(0, 0), v2(1, 0)}, {v2(1, 0), v2(1, 0)},
                      {v2(1, 0), v2(1, 0)}, std::move(jumps));
}

TEST(JumpFunctionNorm, ZeroElement) {
  EXPECT_EQ(norm(JumpFunction::constant(1.0, v2(0, 0))), 0.0);
}

TEST(JumpFunctionNorm, SingleJumpRecord) {
  const auto f = JumpFunction::constant(1.0, v2(0, 0), {{0.25, v2(1, -1)}});
  EXPECT_NEAR(norm(f), 0.25 + std::sqrt(2.0), 1e-15);
}

TEST(JumpFunctionNorm, RampWithTwoJumps) {
  const auto f = identity_ramp({{0.5, v2(2, 0)}, {0.2, v2(0, 1)}});
  EXPECT_NEAR(norm(f), 4.7, 1e-14);
}

TEST(JumpFunctionNorm, InteriorMaximumOfCubicIsFound) {
  // phi(t) = sin-like bump with zero nodal values; the sup sits inside.
  const auto f = JumpFunction(1.0, {0.0, 1.0}, {v1(0), v1(0)}, {v1(4), v1(-4)}, {v1(4), v1(-4)}, {});
  const double sampled = oracle::sampled_sup(f, 20000);
  EXPECT_NEAR(norm(f), 1.0, 1e-12);  // 4 s (1 - s) peaks at 1
  EXPECT_GE(norm(f) + 1e-12, sampled);
}

TEST(JumpFunctionDistance, Examples) {
  const auto f = identity_ramp({{0.3, v2(1, 1)}});
  EXPECT_EQ(distance(f, f), 0.0);
  EXPECT_NEAR(distance(JumpFunction::constant(1.0, v2(1, 0)), JumpFunction::constant(1.0, v2(0, 0))),
              1.0, 1e-15);
  const auto a = JumpFunction::constant(1.0, v2(0, 0), {{0.25, v2(1, 0)}});
  const auto b = JumpFunction::constant(1.0, v2(0, 0), {{0.30, v2(1, 0)}});
  EXPECT_NEAR(distance(a, b), 0.05, 1e-15);
}

TEST(JumpFunctionDistance, PadsMissingJumpsAtHorizon) {
  const auto a = JumpFunction::constant(1.0, v2(0, 0), {{0.25, v2(1, 0)}});
  const auto b = JumpFunction::constant(1.0, v2(0, 0));
  // (0.25, (1,0)) against the padded (1, 0): |0.25 - 1| + 1
  EXPECT_NEAR(distance(a, b), 1.75, 1e-15);
  EXPECT_NEAR(distance(a, b.with_jump_count(1)), 1.75, 1e-15);
}

TEST(JumpFunctionDistance, MismatchedShapesAreRejected) {
  const auto a = JumpFunction::constant(1.0, v2(0, 0));
  EXPECT_THROW(distance(a, JumpFunction::constant(1.0, v1(0))), ContractViolation);
  EXPECT_THROW(distance(a, JumpFunction::constant(2.0, v2(0, 0))), ContractViolation);
}

TEST(JumpFunctionEvalHat, AppliesJumpsInTimeOrder) {
  const auto f = JumpFunction::constant(1.0, v2(0, 0), {{0.5, v2(2, 0)}, {0.2, v2(0, 1)}});
  EXPECT_TRUE(f.eval_hat(0.1).isApprox(v2(0, 0)));
  EXPECT_TRUE(f.eval_hat(0.3).isApprox(v2(0, 1)));
  EXPECT_TRUE(f.eval_hat(0.7).isApprox(v2(2, 1)));
}

TEST(JumpFunctionEvalHat, LeftContinuousAtJumpTimes) {
  const auto f = identity_ramp({{0.5, v2(2, 0)}, {0.2, v2(0, 1)}});
  for (const auto& r : f.jumps()) {
    const Vec at = f.eval_hat(r.time);
    const Vec left = f.eval_hat(r.time - 1e-12);
    EXPECT_LT((at - left).norm(), 1e-11);
    for (double eps : {1e-4, 1e-7, 1e-10}) {
      EXPECT_LT((f.eval_hat(r.time + eps) - at - r.jump).norm(), 2 * eps);
    }
  }
}

TEST(JumpFunctionEvalHat, OutsideIntervalIsDomainError) {
  const auto f = JumpFunction::constant(1.0, v2(0, 0));
  EXPECT_THROW(f.eval_hat(-1e-9), DomainError);
  EXPECT_THROW(f.eval_hat(1.0 + 1e-9), DomainError);
}

TEST(JumpFunction, NodesReproduceStoredValues) {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = oracle::random_jump_function(rng, 3, 2);
    for (std::size_t i = 0; i < f.node_count(); ++i) {
      EXPECT_EQ(f.continuous(f.grid()[i]), Vec(f.values().col(i)));
    }
  }
}

TEST(JumpFunction, InterpolationMatchesHermiteOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = oracle::random_jump_function(rng, 2, 0);
    for (int k = 0; k <= 100; ++k) {
      const double t = k / 100.0;
      EXPECT_LT((f.continuous(t) - oracle::continuous_part(f, t)).norm(), 1e-12);
    }
  }
}

TEST(JumpFunction, RejectsMalformedInput) {
  EXPECT_THROW(JumpFunction(1.0, {0.0, 0.5}, {v1(0), v1(0)}, {}), ContractViolation);
  EXPECT_THROW(JumpFunction(1.0, {0.0, 0.6, 0.6, 1.0}, {v1(0), v1(0), v1(0), v1(0)}, {}),
               ContractViolation);
  EXPECT_THROW(JumpFunction::constant(1.0, v1(0), {{1.5, v1(1)}}), ContractViolation);
  EXPECT_THROW(JumpFunction::constant(1.0, v1(0)).with_jump_count(0).scaled(-1.0), DomainError);
}

TEST(JumpFunctionSpace, NormAxiomsOnRandomElements) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const auto f = oracle::random_jump_function(rng, 2, 2);
    const auto g = oracle::random_jump_function(rng, 2, 2);
    const auto h = oracle::random_jump_function(rng, 2, 2);
    const double nf = norm(f);
    EXPECT_GT(nf, 0.0);
    EXPECT_GE(nf + 1e-12, oracle::sampled_sup(f, 50) + oracle::jump_sum(f));
    // Jump times must stay in [0, a], so c > 1 is checked as f = c (f / c).
    const double c = rng.uniform(0.0, 1.0);
    EXPECT_NEAR(norm(f.scaled(c)), c * nf, 1e-12 * (1 + c * nf));
    const double big = rng.uniform(1.0, 10.0);
    EXPECT_NEAR(nf, big * norm(f.scaled(1.0 / big)), 1e-12 * (1 + nf));
    EXPECT_LE(distance(f, h), distance(f, g) + distance(g, h) + 1e-12);
    EXPECT_NEAR(distance(f, g), distance(g, f), 1e-12);
  }
}

TEST(JumpFunctionSpace, SortOrderInvariance) {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = oracle::random_jump_function(rng, 2, 3);
    const auto g = oracle::random_jump_function(rng, 2, 3);
    auto permuted = f.jumps();
    std::swap(permuted[0], permuted[2]);
    std::swap(permuted[1], permuted[2]);
    const JumpFunction fp(f.horizon(), f.grid(), [&] {
      std::vector<Vec> v;
      for (Eigen::Index i = 0; i < f.values().cols(); ++i) v.push_back(f.values().col(i));
      return v;
    }(), [&] {
      std::vector<Vec> v;
      for (Eigen::Index i = 0; i < f.slopes_in().cols(); ++i) v.push_back(f.slopes_in().col(i));
      return v;
    }(), [&] {
      std::vector<Vec> v;
      for (Eigen::Index i = 0; i < f.slopes_out().cols(); ++i) v.push_back(f.slopes_out().col(i));
      return v;
    }(), permuted);
    EXPECT_EQ(norm(fp), norm(f));
    EXPECT_EQ(distance(fp, g), distance(f, g));
    EXPECT_EQ(distance(fp, f), 0.0);
    for (double t : {0.0, 0.13, 0.5, 0.77, 1.0}) EXPECT_EQ(fp.eval_hat(t), f.eval_hat(t));
  }
}

TEST(Reduce, JumpFreePathIsItsOwnContinuousPart) {
  std::vector<PathSample> path;
  for (int k = 0; k <= 10; ++k) {
    const double t = k / 10.0;
    path.push_back({t, v1(t * t), v1(2 * t), v1(2 * t)});
  }
  const auto f = reduce(1.0, path);
  EXPECT_EQ(f.jump_count(), 0u);
  for (int k = 0; k <= 40; ++k) {
    const double t = k / 40.0;
    EXPECT_NEAR(f.eval_hat(t)[0], t * t, 1e-14);
  }
}

TEST(Reduce, StepFunction) {
  const std::vector<PathSample> path{{0.0, v1(1), v1(0), v1(0)},
                                     {0.5, v1(1), v1(0), v1(0)},
                                     {0.5, v1(3), v1(0), v1(0)},
                                     {1.0, v1(3), v1(0), v1(0)}};
  const auto f = reduce(1.0, path);
  ASSERT_EQ(f.jump_count(), 1u);
  EXPECT_EQ(f.jumps()[0].time, 0.5);
  EXPECT_EQ(f.jumps()[0].jump[0], 2.0);
  for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) EXPECT_EQ(f.continuous(t)[0], 1.0);
  EXPECT_EQ(f.eval_hat(0.5)[0], 1.0);
  EXPECT_EQ(f.eval_hat(0.75)[0], 3.0);
}

TEST(Reduce, PadsToRequestedJumpCount) {
  const std::vector<PathSample> path{{0.0, v1(1), v1(0), v1(0)}, {1.0, v1(1), v1(0), v1(0)}};
  const auto f = reduce(1.0, path, 2);
  ASSERT_EQ(f.jump_count(), 2u);
  for (const auto& r : f.jumps()) {
    EXPECT_EQ(r.time, 1.0);
    EXPECT_EQ(r.jump.norm(), 0.0);
  }
}

TEST(Reduce, EqualJumpTimesAreDegenerate) {
  const std::vector<PathSample> path{{0.0, v1(0), v1(0), v1(0)}, {0.5, v1(0), v1(0), v1(0)},
                                     {0.5, v1(1), v1(0), v1(0)}, {0.5, v1(2), v1(0), v1(0)},
                                     {1.0, v1(2), v1(0), v1(0)}};
  EXPECT_THROW(reduce(1.0, path), DegenerateCorrespondence);
}

TEST(Reduce, RoundTripReproducesRawPath) {
  // Piecewise quadratics with jumps at random times; slopes are exact so the
  // Hermite representation is exact as well.
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const double t1 = rng.uniform(0.1, 0.45), t2 = rng.uniform(0.55, 0.9);
    const double c0 = rng.uniform(-1, 1), c1 = rng.uniform(-1, 1), c2 = rng.uniform(-1, 1);
    const double j1 = rng.uniform(-2, 2), j2 = rng.uniform(-2, 2);
    auto raw = [&](double t) {
      double y = c0 + c1 * t + c2 * t * t;
      if (t > t1) y += j1;
      if (t > t2) y += j2;
      return y;
    };
    auto slope = [&](double t) { return c1 + 2 * c2 * t; };
    std::vector<PathSample> path;
    std::vector<double> times;
    for (int k = 0; k <= 20; ++k) times.push_back(k / 20.0);
    times.push_back(t1);
    times.push_back(t2);
    std::sort(times.begin(), times.end());
    for (double t : times) {
      path.push_back({t, v1(raw(t)), v1(slope(t)), v1(slope(t))});
      if (t == t1) path.push_back({t, v1(raw(t) + j1), v1(slope(t)), v1(slope(t))});
      if (t == t2) path.push_back({t, v1(raw(t) + j2), v1(slope(t)), v1(slope(t))});
    }
    const auto f = reduce(1.0, path);
    ASSERT_EQ(f.jump_count(), 2u);
    for (int k = 0; k <= 500; ++k) {
      const double s = k / 500.0;
      if (s == t1 || s == t2) continue;
      EXPECT_NEAR(f.eval_hat(s)[0], raw(s), 1e-12);
    }
  }
}

TEST(JumpFunctionJson, FieldNamesAndRoundTrip) {
  Rng rng(3);
  const auto f = oracle::random_jump_function(rng, 2, 2);
  const auto j = to_json(f);
  for (const char* key : {"horizon", "dim", "grid", "values", "jumps"}) EXPECT_TRUE(j.contains(key));
  EXPECT_TRUE(j["jumps"][0].contains("l"));
  EXPECT_TRUE(j["jumps"][0].contains("v"));
  const auto g = jump_function_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(distance(f, g), 0.0);
  EXPECT_EQ(to_json(g).dump(), j.dump());
}

}  // namespace
}  // namespace pulse
