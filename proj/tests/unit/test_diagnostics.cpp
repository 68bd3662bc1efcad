#include <gtest/gtest.h>

#include "sizerforge/diagnostics.hpp"
#include "sizerforge/error.hpp"
#include "support/fixtures.hpp"

using namespace sizerforge;

TEST(Diagnostics, StagnantReportMatchesGolden) {
  const auto report = analyze(sftest::stagnant_history(), sftest::stagnant_space());
  std::string golden = sftest::read_file(sftest::data_path("golden/stagnant_report.txt"));
  while (!golden.empty() && golden.back() == '\n') golden.pop_back();
  std::string text = to_text(report);
  while (!text.empty() && text.back() == '\n') text.pop_back();
  EXPECT_EQ(text, golden);
}

TEST(Diagnostics, StagnantStructure) {
  const auto r = analyze(sftest::stagnant_history(), sftest::stagnant_space());
  EXPECT_EQ(r.iterations, 4u);
  EXPECT_EQ(r.designs_evaluated, 73u);
  EXPECT_EQ(r.status, ConvergenceStatus::Stagnant);
  EXPECT_EQ(r.unchanged_iterations, 3u);
  EXPECT_EQ(r.priority, Severity::High);
  EXPECT_TRUE(r.should_regenerate);
  ASSERT_EQ(r.issues.size(), 4u);
  EXPECT_EQ(r.issues[0].kind, IssueKind::BoundaryLower);
  EXPECT_EQ(r.issues[0].variable, "W_diff");
  EXPECT_EQ(r.issues[0].count, 10u);
  EXPECT_EQ(r.issues[3].kind, IssueKind::Stagnation);
  EXPECT_EQ(r.issues[3].severity, Severity::Medium);
  EXPECT_EQ(r.best_iteration, 2);
  EXPECT_FALSE(r.feasible_found);
  const auto j = to_json(r);
  EXPECT_EQ(j["issues"].size(), 4u);
}

TEST(Diagnostics, VariableImpact) {
  const auto impact = variable_impact(sftest::stagnant_history(), sftest::stagnant_space(), 10);
  ASSERT_EQ(impact.size(), 4u);
  EXPECT_EQ(impact[0].variable, "W_casc");
  EXPECT_EQ(impact[0].frequencies.front(), (std::pair<double, std::size_t>{1.68, 4}));
  EXPECT_FALSE(impact[0].converged);
  EXPECT_EQ(impact[1].variable, "W_diff");
  EXPECT_TRUE(impact[1].converged);
  EXPECT_DOUBLE_EQ(impact[3].min, 0.84);
  EXPECT_DOUBLE_EQ(impact[3].max, 2.52);
}

TEST(Diagnostics, PureAndEmpty) {
  const auto h = sftest::stagnant_history();
  const auto s = sftest::stagnant_space();
  EXPECT_EQ(to_text(analyze(h, s)), to_text(analyze(h, s)));
  try {
    analyze(History{}, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyHistory);
  }
}

TEST(Diagnostics, ImprovingRunIsLowPriority) {
  History h;
  const auto s = sftest::stagnant_space();
  double fom = 0.01;
  for (int it = 1; it <= 3; ++it) {
    for (double tail : {0.84, 1.26, 1.68, 2.1, 2.52}) {
      EvaluatedDesign e;
      e.design = Design({{"W_tail", tail}, {"W_diff", it == 1 ? 0.84 : it == 2 ? 1.05 : 1.26}, {"W_casc", 1.68}, {"W_load", 1.68}});
      e.fom = Fom(fom += 0.01);
      e.method = "lhs";
      e.iteration = it;
      h.append(e);
    }
    h.close_iteration(1, it, "lhs", 5);
  }
  const auto r = analyze(h, s);
  EXPECT_EQ(r.status, ConvergenceStatus::Improving);
  EXPECT_EQ(r.unchanged_iterations, 1u);
}
