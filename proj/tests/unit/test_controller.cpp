#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sizerforge/controller.hpp"
#include "sizerforge/error.hpp"
#include "support/fixtures.hpp"

using namespace sizerforge;
namespace fs = std::filesystem;

namespace {

RunResult run_rule(const BenchmarkConfig& cfg, RunOptions opt) {
  SurrogateEvaluator ev(cfg.passthrough_scalar("surrogate_model"));
  DecisionAgent agent(cfg);
  return run(cfg, ev, agent, opt);
}

std::string history_text(const RunResult& r) {
  std::stringstream ss;
  write_history_jsonl(r.history, ss, false);
  return ss.str();
}

RunOptions options(std::uint64_t seed, std::size_t budget = 300) {
  RunOptions o;
  o.seed = seed;
  o.budget = budget;
  return o;
}

}  // namespace

TEST(Controller, RespectsBudgetAndIsDeterministic) {
  const auto cfg = sftest::surrogate_config("sota_med");
  const RunResult a = run_rule(cfg, options(7));
  const RunResult b = run_rule(cfg, options(7));
  EXPECT_LE(a.evals_used, 300u);
  EXPECT_EQ(a.evals_used, a.history.size());
  EXPECT_LE(a.outer_loops_used, 3);
  ASSERT_TRUE(a.best.has_value());
  EXPECT_EQ(a.decisions.dump(), b.decisions.dump());
  EXPECT_EQ(history_text(a), history_text(b));
  EXPECT_FALSE(a.stop_reason.empty());
  EXPECT_EQ(a.outcome, "ok");
  EXPECT_EQ(a.space_generations.size(), static_cast<std::size_t>(a.outer_loops_used));
  for (std::size_t i = 1; i < a.space_generations.size(); ++i)
    EXPECT_GE(a.space_generations[i].generation(), a.space_generations[i - 1].generation());
  for (const auto& rec : a.history.records()) EXPECT_LT(rec.outer_loop, a.outer_loops_used);
}

TEST(Controller, InnerCapBoundsEachLoop) {
  const auto cfg = sftest::surrogate_config("sota_hard");
  RunOptions o = options(3);
  o.inner_cap = 40;
  const RunResult r = run_rule(cfg, o);
  std::map<int, std::size_t> per_loop;
  for (const auto& rec : r.history.records()) ++per_loop[rec.outer_loop];
  for (const auto& [loop, n] : per_loop) EXPECT_LE(n, 40u) << "loop " << loop;
}

TEST(Controller, AblationsShapeTheRun) {
  const auto cfg = sftest::surrogate_config("sota_med");
  RunOptions o = options(1);
  o.use_srl = false;
  const RunResult no_srl = run_rule(cfg, o);
  EXPECT_EQ(no_srl.outer_loops_used, 1);

  o = options(1);
  o.use_ssd = false;
  const RunResult no_ssd = run_rule(cfg, o);
  ASSERT_FALSE(no_ssd.space_generations.empty());
  EXPECT_EQ(no_ssd.space_generations.front().cardinality(), 6561u);
}

TEST(Controller, ZeroBudgetHasNoValidDesign) {
  const auto cfg = sftest::surrogate_config("sota_easy");
  const RunResult r = run_rule(cfg, options(1, 0));
  EXPECT_EQ(r.evals_used, 0u);
  EXPECT_FALSE(r.best.has_value());
  EXPECT_EQ(r.outcome, "NoValidDesign");
}

TEST(Controller, SmallGridIsExhaustedWithoutOverspending) {
  const auto cfg = sftest::surrogate_config("sota_easy");
  const RunResult r = run_rule(cfg, options(2));
  EXPECT_LE(r.evals_used, 81u);
  ASSERT_TRUE(r.best.has_value());
}

TEST(Baselines, StayInBudgetAndRepeat) {
  const auto cfg = sftest::surrogate_config("sota_med");
  for (const std::string algo : {"ga_baseline", "bo_baseline", "turbo_baseline", "lhs"}) {
    SurrogateEvaluator ev("sota_med");
    RunOptions o = options(5, 60);
    const RunResult a = run_baseline(cfg, ev, algo, o);
    const RunResult b = run_baseline(cfg, ev, algo, o);
    EXPECT_LE(a.evals_used, 60u) << algo;
    EXPECT_GT(a.evals_used, 0u) << algo;
    EXPECT_EQ(history_text(a), history_text(b)) << algo;
    EXPECT_EQ(a.space_generations.size(), 1u) << algo;
    EXPECT_EQ(a.space_generations.front().cardinality(), 6561u) << algo;
  }
  SurrogateEvaluator ev("sota_med");
  try {
    run_baseline(cfg, ev, "random_walk", options(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownMethod);
  }
}

TEST(Controller, WritesRunOutputs) {
  const auto cfg = sftest::surrogate_config("sota_easy");
  const RunResult r = run_rule(cfg, options(4, 40));
  const fs::path dir = fs::temp_directory_path() / ("sizerforge-test-run-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  write_run_outputs(r, cfg, dir.string());
  for (const char* f : {"run.json", "decisions.json", "history.jsonl", "spaces.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_TRUE(fs::exists(dir / "reports" / "loop_1.txt"));
  const auto summary = run_summary_json(r, cfg);
  EXPECT_EQ(summary["evals_used"], r.evals_used);
  std::ifstream in(dir / "history.jsonl");
  EXPECT_EQ(read_history_jsonl(in).size(), r.history.size());
  fs::remove_all(dir);
}
