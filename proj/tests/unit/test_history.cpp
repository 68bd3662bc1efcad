#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "sizerforge/error.hpp"
#include "sizerforge/history.hpp"
#include "sizerforge/numeric.hpp"

using namespace sizerforge;

namespace {

EvaluatedDesign rec(double x, std::optional<double> fom, bool feasible = false) {
  EvaluatedDesign r;
  r.design = Design({{"x", x}});
  if (fom) r.fom = Fom(*fom);
  else r.sim_status = SimStatus::SimFailed;
  r.feasible = feasible;
  r.raw_metrics = {{"m", x}};
  r.method = "lhs";
  return r;
}

}  // namespace

TEST(History, DenseIndicesAndDedupe) {
  History h;
  EXPECT_EQ(h.append(rec(1, 0.1)), 1u);
  EXPECT_EQ(h.append(rec(2, 0.2)), 2u);
  EXPECT_FALSE(h.append(rec(1, 0.5)).has_value());
  EXPECT_EQ(h.size(), 2u);
  EXPECT_TRUE(h.contains(Design({{"x", 2}}).id()));
}

TEST(History, BestSoFarAndEvalsToBest) {
  History h;
  h.append(rec(1, 0.095));
  h.append(rec(2, 0.099));
  h.append(rec(3, 0.099));
  const auto b = best_so_far(h);
  EXPECT_DOUBLE_EQ(b.record->fom.value(), 0.099);
  EXPECT_EQ(b.evals_to_best, 2u);
}

TEST(History, BestErrors) {
  History h;
  try {
    best_so_far(h);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyHistory);
  }
  h.append(rec(1, std::nullopt));
  try {
    best_so_far(h);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoValidDesign);
  }
}

TEST(History, ReportPrefersFeasible) {
  History h;
  h.append(rec(1, 2.0));
  h.append(rec(2, 1.5, true));
  EXPECT_DOUBLE_EQ(best_so_far(h).record->fom.value(), 2.0);
  const auto r = best_for_report(h.records());
  EXPECT_DOUBLE_EQ(r.record->fom.value(), 1.5);
  EXPECT_EQ(r.evals_to_best, 2u);
}

TEST(History, ImprovementPct) {
  History h;
  h.append(rec(1, 0.095));
  h.close_iteration(1, 1, "lhs", 1);
  h.append(rec(2, 0.099));
  h.close_iteration(1, 2, "lhs", 1);
  EXPECT_NEAR(improvement_pct(h, 1), 100.0 * (0.099 - 0.095) / 0.095, 1e-12);
  EXPECT_NEAR(improvement_pct(h, 1), 4.2105, 1e-4);
  h.close_iteration(1, 3, "lhs", 0);
  EXPECT_EQ(improvement_pct(h, 1), 0.0);
  EXPECT_NEAR(improvement_pct(h, 2), 4.2105, 1e-4);
  try {
    improvement_pct(h, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientHistory);
  }
  ASSERT_EQ(h.summaries().size(), 3u);
  EXPECT_FALSE(h.summaries()[0].improvement_pct.has_value());
}

TEST(History, ImprovementFromZero) {
  std::vector<IterationSummary> s(2);
  s[0].best_fom_so_far = Fom(0.0);
  s[1].best_fom_so_far = Fom(1.0);
  EXPECT_TRUE(std::isinf(improvement_pct(s, 1)));
  s[1].best_fom_so_far = Fom(0.0);
  EXPECT_EQ(improvement_pct(s, 1), 0.0);
}

TEST(History, SummariesNeverDecrease) {
  History h;
  h.append(rec(1, 0.5));
  h.close_iteration(1, 1, "lhs", 1);
  h.append(rec(2, 0.1));
  const auto& s = h.close_iteration(1, 2, "lhs", 1);
  EXPECT_DOUBLE_EQ(s.best_fom_so_far.value(), 0.5);
}

TEST(History, JsonlRoundTrip) {
  History h;
  h.append(rec(1, 0.1, true));
  h.append(rec(2, std::nullopt));
  std::stringstream ss;
  write_history_jsonl(h, ss);
  const auto back = read_history_jsonl(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].design, h.records()[0].design);
  EXPECT_EQ(back[0].fom, h.records()[0].fom);
  EXPECT_TRUE(back[0].feasible);
  EXPECT_EQ(back[1].sim_status, SimStatus::SimFailed);
  EXPECT_TRUE(back[1].fom.is_failed());
}

TEST(Numeric, SeedsAndStats) {
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
  EXPECT_EQ(format_number(2.1), "2.1");
  EXPECT_EQ(format_number(0.1 + 0.2), "0.30000000000000004");
  const std::vector<double> xs{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(mean(xs), 2.5);
  EXPECT_NEAR(sample_stddev(xs), std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_EQ(sample_stddev(std::vector<double>{3}), 0.0);
}
