#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "sizerforge/error.hpp"
#include "sizerforge/spec_expr.hpp"

using namespace sizerforge;

namespace {

const char* kA2 = "fom > 0.100 AND dc_gain_db > 55 AND ugbw > 10 AND power_dc < 50";

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

}  // namespace

TEST(SpecExpr, ParsesTheTelescopicSpec) {
  const SpecExpr e = parse_spec(kA2);
  ASSERT_EQ(e.clauses.size(), 4u);
  EXPECT_EQ(e.clauses[0].metric, "fom");
  EXPECT_EQ(e.clauses[0].op, CompareOp::Greater);
  EXPECT_DOUBLE_EQ(e.clauses[0].threshold, 0.1);
  EXPECT_EQ(e.clauses[3].metric, "power_dc");
  EXPECT_EQ(e.clauses[3].op, CompareOp::Less);

  const auto dirs = split_directions(e);
  ASSERT_EQ(dirs.maximize.size(), 3u);
  ASSERT_EQ(dirs.minimize.size(), 1u);
  EXPECT_EQ(dirs.maximize[0].metric, "fom");
  EXPECT_EQ(dirs.maximize[1].metric, "dc_gain_db");
  EXPECT_EQ(dirs.maximize[2].metric, "ugbw");
  EXPECT_EQ(dirs.minimize[0].metric, "power_dc");
}

TEST(SpecExpr, AllOperatorsAndCaseInsensitiveAnd) {
  const SpecExpr e = parse_spec("a >= 1 and b <= 2e-3 And c < -4 AND d > .5");
  ASSERT_EQ(e.clauses.size(), 4u);
  EXPECT_EQ(e.clauses[0].op, CompareOp::GreaterEqual);
  EXPECT_EQ(e.clauses[1].op, CompareOp::LessEqual);
  EXPECT_DOUBLE_EQ(e.clauses[1].threshold, 2e-3);
  EXPECT_DOUBLE_EQ(e.clauses[2].threshold, -4.0);
  EXPECT_DOUBLE_EQ(e.clauses[3].threshold, 0.5);
}

TEST(SpecExpr, RoundTripsThroughText) {
  for (const char* text : {kA2, "x >= 1.5", "a <= 0.001 AND b > 1e9"}) {
    const SpecExpr e = parse_spec(text);
    EXPECT_EQ(parse_spec(to_string(e)), e) << text;
  }
}

TEST(SpecExpr, RejectsCombinatorsAndGarbage) {
  EXPECT_EQ(code_of([] { parse_spec("a > 1 OR b < 2"); }), ErrorCode::UnsupportedCombinator);
  EXPECT_EQ(code_of([] { parse_spec("NOT a > 1"); }), ErrorCode::UnsupportedCombinator);
  EXPECT_EQ(code_of([] { parse_spec("(a > 1)"); }), ErrorCode::UnsupportedCombinator);
  EXPECT_EQ(code_of([] { parse_spec("a > "); }), ErrorCode::SpecParseError);
  EXPECT_EQ(code_of([] { parse_spec("a == 1"); }), ErrorCode::SpecParseError);
  EXPECT_EQ(code_of([] { parse_spec(""); }), ErrorCode::SpecParseError);
  EXPECT_EQ(code_of([] { parse_spec("a > 1 AND"); }), ErrorCode::SpecParseError);
}

TEST(SpecExpr, ParseErrorReportsColumn) {
  try {
    parse_spec("a > 1 AND b ? 2");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("12"), std::string::npos) << e.what();
  }
}

TEST(SpecExpr, EvaluatesExactly) {
  const SpecExpr e = parse_spec(kA2);
  std::map<std::string, double> m{{"fom", 0.099}, {"dc_gain_db", 60}, {"ugbw", 20}, {"power_dc", 40}};
  auto v = evaluate_spec(e, m);
  EXPECT_FALSE(v.pass);
  ASSERT_EQ(v.clauses.size(), 4u);
  EXPECT_FALSE(v.clauses[0].pass);
  EXPECT_TRUE(v.clauses[1].pass);

  m["fom"] = 0.1;  // strict bound at equality fails
  EXPECT_FALSE(evaluate_spec(e, m).pass);
  m["fom"] = std::nextafter(0.1, 1.0);
  EXPECT_TRUE(evaluate_spec(e, m).pass);

  EXPECT_TRUE(evaluate_spec(parse_spec("x >= 2 AND y <= 3"), {{"x", 2}, {"y", 3}}).pass);
}

TEST(SpecExpr, MissingMetricThrows) {
  EXPECT_EQ(code_of([] { evaluate_spec(parse_spec(kA2), {{"fom", 1.0}}); }), ErrorCode::MissingMetric);
}
