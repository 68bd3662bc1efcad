#include <gtest/gtest.h>

#include <cmath>

#include "sizerforge/error.hpp"
#include "sizerforge/fom.hpp"
#include "sizerforge/rng.hpp"

using namespace sizerforge;

namespace {
const SpecExpr kSpec = parse_spec("fom > 0.100 AND dc_gain_db > 55 AND ugbw > 10 AND power_dc < 50");
}

TEST(Fom, ProductOfNormalisedMetrics) {
  const auto dirs = split_directions(kSpec);
  const Fom f = compute_fom(dirs, {{"dc_gain_db", 66}, {"ugbw", 20}, {"power_dc", 25}});
  ASSERT_FALSE(f.is_failed());
  EXPECT_DOUBLE_EQ(f.value(), (66.0 / 55.0) * (20.0 / 10.0) / (25.0 / 50.0));
}

TEST(Fom, AllAtSpecIsExactlyOne) {
  const Fom f = compute_fom(split_directions(kSpec), {{"dc_gain_db", 55}, {"ugbw", 10}, {"power_dc", 50}});
  EXPECT_EQ(f.value(), 1.0);
}

TEST(Fom, ScaleInvariantInEachMetric) {
  const auto dirs = split_directions(parse_spec("a > 2 AND b < 3"));
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const double a = 0.1 + rng.uniform() * 10, b = 0.1 + rng.uniform() * 10, k = 0.5 + rng.uniform() * 4;
    const double base = compute_fom(dirs, {{"a", a}, {"b", b}}).value();
    EXPECT_NEAR(compute_fom(dirs, {{"a", a * k}, {"b", b}}).value(), base * k, 1e-12 * base * k);
    EXPECT_NEAR(compute_fom(dirs, {{"a", a}, {"b", b * k}}).value(), base / k, 1e-12 * base / k);
  }
}

TEST(Fom, NonPositiveOrNonFiniteIsFailed) {
  const auto dirs = split_directions(kSpec);
  EXPECT_TRUE(compute_fom(dirs, {{"dc_gain_db", -3}, {"ugbw", 20}, {"power_dc", 25}}).is_failed());
  EXPECT_TRUE(compute_fom(dirs, {{"dc_gain_db", 60}, {"ugbw", 20}, {"power_dc", 0}}).is_failed());
  EXPECT_TRUE(compute_fom(dirs, {{"dc_gain_db", NAN}, {"ugbw", 20}, {"power_dc", 1}}).is_failed());
}

TEST(Fom, MissingMetricAndBadThreshold) {
  try {
    compute_fom(split_directions(kSpec), {{"dc_gain_db", 60}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingMetric);
  }
  try {
    compute_fom(split_directions(parse_spec("a > 0")), {{"a", 1}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidThreshold);
  }
}

TEST(Fom, FailedOrdersBelowEverything) {
  EXPECT_LT(Fom::failed(), Fom(-1e300));
  EXPECT_EQ(Fom::failed(), Fom::failed());
  EXPECT_NE(Fom::failed(), Fom(0.0));
  EXPECT_TRUE(std::isinf(Fom::failed().score()));
}

TEST(Assess, FomClauseUsesEngineFom) {
  // Stagnant run: best FoM 0.0990 misses fom > 0.100.
  Assessment a = assess(parse_spec("fom > 0.100 AND x > 1"), {{"x", 0.099}});
  EXPECT_NEAR(a.fom.value(), 0.099, 1e-15);
  EXPECT_FALSE(a.feasible);

  a = assess(kSpec, {{"dc_gain_db", 66}, {"ugbw", 20}, {"power_dc", 25}});
  EXPECT_TRUE(a.feasible);
  EXPECT_DOUBLE_EQ(a.normalized.at("power_dc"), 0.5);

  // A simulator-reported fom that disagrees is overridden.
  a = assess(kSpec, {{"dc_gain_db", 66}, {"ugbw", 20}, {"power_dc", 25}, {"fom", 0.01}});
  EXPECT_TRUE(a.feasible);
}

TEST(Assess, AtSpecWithNonStrictClausesIsFeasible) {
  const Assessment a = assess(parse_spec("a >= 2 AND b <= 4"), {{"a", 2}, {"b", 4}});
  EXPECT_TRUE(a.feasible);
  EXPECT_EQ(a.fom.value(), 1.0);
}
