#include <gtest/gtest.h>

#include "sizerforge/agents.hpp"
#include "sizerforge/error.hpp"
#include "support/fixtures.hpp"

using namespace sizerforge;

namespace {

const std::string kTelescopic = std::string(SIZERFORGE_FIXTURES_DIR) + "/telescopic_ota.yaml";

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

struct Stagnant {
  BenchmarkConfig cfg = sftest::stagnant_config();
  History history = sftest::stagnant_history();
  SearchSpace space = sftest::stagnant_space();
  DiagnosticsReport report = analyze(history, space);
  CircuitUnderstanding und = rule_understand(cfg);

  InnerContext inner() const {
    return {&cfg, &history, &space, &report, {300, 73, 100, 73}, 4, {"lhs", "bayesian", "annealing"}, "bayesian", 1};
  }
  OuterContext outer() const { return {&cfg, &history, &space, &report, &und, {300, 73, 100, 73}, 1, false}; }
};

const char* kPlan = R"(Here is the plan:
```json
{
  "optimization_target": "fom",
  "variable_ranking": [
    {"rank": 1, "variable": "W_diff_base", "impact_on_target": "critical", "reasoning": "gm"},
    {"rank": 2, "variable": "W_tail_base", "impact_on_target": "high", "reasoning": "bias"}
  ],
  "optimization_configuration": {
    "variables_to_optimize": {
      "W_diff_base": {"rank": 1, "search_space": [0.84, 1.0, 1.68, "2.52"], "sensitivity": "critical"},
      "W_tail_base": {"rank": 2, "search_space": [1.26, 1.68, 2.1]}
    },
    "variables_fixed": {
      "W_casc_base": {"rank": 3, "fixed_value": 1.68},
      "W_load_base": {"rank": 4, "fixed_value": 2.0}
    }
  }
}
```)";

}  // namespace

TEST(RulePolicy, PlanOnTelescopic) {
  const auto cfg = load_config(kTelescopic);
  const auto und = rule_understand(cfg);
  EXPECT_EQ(und.source, "rule");
  const auto plan = rule_plan(cfg, und, 3);
  ASSERT_EQ(plan.optimize.size(), 3u);
  ASSERT_EQ(plan.fixed.size(), 1u);
  for (const auto& [name, v] : plan.optimize) EXPECT_EQ(v.values, (std::vector<double>{0.84, 1.26, 1.68, 2.1, 2.52})) << name;
  EXPECT_DOUBLE_EQ(plan.fixed.begin()->second.value, 1.68);
  const SearchSpace s = plan_to_space(plan, cfg, 0);
  EXPECT_EQ(s.cardinality(), 125u);

  const auto full = rule_plan(cfg, und);
  EXPECT_EQ(full.optimize.size(), 4u);
  EXPECT_EQ(rule_plan(cfg, und, 3).optimize.size(), plan.optimize.size());
}

TEST(RulePolicy, SampleSize) {
  EXPECT_EQ(sample_size(0.25, 10, 80, 300), 20u);
  EXPECT_EQ(sample_size(0.25, 10, 8, 300), 10u);
  EXPECT_EQ(sample_size(0.25, 10, 8000, 100), 100u);
  EXPECT_EQ(sample_size(0.25, 10, 80, 5), 5u);
}

TEST(RulePolicy, EmptyHistoryStartsWithLhs) {
  const auto cfg = sftest::stagnant_config();
  const History h;
  const SearchSpace s = sftest::stagnant_space();
  const DiagnosticsReport empty;
  InnerContext ctx{&cfg, &h, &s, &empty, {300, 0, 100, 0}, 0, {}, "", 1};
  const auto d = rule_decide_inner(ctx);
  EXPECT_FALSE(d.stop);
  EXPECT_EQ(d.method.method, "lhs");
  EXPECT_EQ(d.method.n_samples, 20u);
}

TEST(RulePolicy, StagnantInnerStopsOnPlateau) {
  Stagnant f;
  const auto d = rule_decide_inner(f.inner());
  EXPECT_TRUE(d.stop);
  EXPECT_NE(d.reasoning.find("below 2%"), std::string::npos) << d.reasoning;
  for (int i = 0; i < 10; ++i) EXPECT_EQ(to_json(rule_decide_inner(f.inner())), to_json(d));
}

TEST(RulePolicy, StagnantOuterExpandsBoundaries) {
  Stagnant f;
  const auto d = rule_decide_outer(f.outer());
  EXPECT_EQ(d.action, SpaceAction::ExpandRanges);
  ASSERT_EQ(d.edit.changes.size(), 3u);
  EXPECT_EQ(d.edit.changes[0].kind, ChangeKind::ExpandUpper);
  EXPECT_EQ(d.edit.changes[0].variable, "W_diff");
  EXPECT_EQ(d.edit.changes[1].variable, "W_load");
  EXPECT_EQ(d.edit.changes[2].kind, ChangeKind::ExpandLower);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(to_json(rule_decide_outer(f.outer())), to_json(d));

  const SearchSpace next = apply_outer(d, f.space, f.cfg);
  EXPECT_EQ(next.generation(), f.space.generation() + 1);
  EXPECT_GT(next.cardinality(), f.space.cardinality());
  EXPECT_EQ(next.levels("W_load").size(), 5u);
}

TEST(Parsing, PlanWithFencesAndSnapping) {
  const auto cfg = load_config(kTelescopic);
  const SpacePlan p = parse_plan(kPlan, cfg);
  EXPECT_EQ(p.source, "llm");
  EXPECT_EQ(p.optimize.at("W_diff_base").values, (std::vector<double>{0.84, 1.05, 1.68, 2.52}));
  EXPECT_DOUBLE_EQ(p.fixed.at("W_load_base").value, 2.1);
  EXPECT_EQ(p.repairs.size(), 2u);
  EXPECT_EQ(plan_to_space(p, cfg, 0).cardinality(), 12u);
}

TEST(Parsing, SchemaViolations) {
  const auto cfg = load_config(kTelescopic);
  EXPECT_EQ(code_of([] { parse_agent_json("no json here", AgentSchema::Inner); }), ErrorCode::JsonUnparseable);
  EXPECT_EQ(code_of([] { parse_inner(R"({"action": "jump"})"); }), ErrorCode::SchemaViolation);
  EXPECT_EQ(code_of([] { parse_inner(R"({"action": "search", "method": "lhs"})"); }), ErrorCode::SchemaViolation);
  EXPECT_EQ(code_of([] { parse_inner(R"({"action": "search", "method": "lhs", "n_samples": 0})"); }),
            ErrorCode::SchemaViolation);
  EXPECT_EQ(code_of([] { parse_inner(R"({"action": "search", "method": "quantum", "n_samples": 4})"); }),
            ErrorCode::UnknownMethod);
  EXPECT_EQ(code_of([&] { parse_outer(R"({"action_taken": "expand_ranges"})", cfg); }), ErrorCode::SchemaViolation);

  const auto d = parse_inner(R"(// comment
{"action": "search", "method": "genetic", "n_samples": "12", "confidence": "high"} trailing)");
  EXPECT_EQ(d.method.method, "genetic");
  EXPECT_EQ(d.method.n_samples, 12u);
  EXPECT_EQ(d.confidence, "high");
  EXPECT_TRUE(parse_inner(R"({"action": "stop", "reasoning": "done"})").stop);
  EXPECT_EQ(parse_outer(R"({"action_taken": "converged"})", cfg).action, SpaceAction::Converged);
}

TEST(Agent, RetriesOnceThenFallsBack) {
  Stagnant f;
  int calls = 0;
  auto client = std::make_shared<CallbackLlmClient>([&](const LlmRequest& r) {
    ++calls;
    if (calls == 1) {
      EXPECT_EQ(r.kind, "inner");
      return std::string("not json");
    }
    EXPECT_NE(r.prompt.find("rejected"), std::string::npos);
    return std::string(R"({"action": "search", "method": "lhs", "n_samples": 500})");
  });
  DecisionAgent agent(f.cfg, client);
  const auto d = agent.decide_inner(f.inner());
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(d.source, "llm");
  EXPECT_EQ(d.method.n_samples, 27u);  // inner cap 100, 73 used
  ASSERT_EQ(agent.events().size(), 2u);
  EXPECT_EQ(agent.events()[0].what, "retry");
  EXPECT_EQ(agent.events()[1].what, "repair");

  DecisionAgent stubborn(f.cfg, std::make_shared<CallbackLlmClient>([](const LlmRequest&) { return std::string("{}"); }));
  const auto fb = stubborn.decide_outer(f.outer());
  EXPECT_EQ(fb.source, "fallback");
  EXPECT_EQ(fb.edit.changes.size(), rule_decide_outer(f.outer()).edit.changes.size());
  EXPECT_EQ(stubborn.events().back().what, "fallback");

  DecisionAgent offline(f.cfg, std::make_shared<CallbackLlmClient>([](const LlmRequest&) -> std::string {
    throw Error(ErrorCode::LlmTransport, "down");
  }));
  EXPECT_EQ(offline.understand_circuit().source, "fallback");
  EXPECT_EQ(offline.events().size(), 1u);
}

TEST(Agent, RuleBackendNeedsNoClient) {
  Stagnant f;
  DecisionAgent agent(f.cfg);
  EXPECT_FALSE(agent.uses_llm());
  EXPECT_EQ(agent.decide_outer(f.outer()).source, "rule");
  EXPECT_TRUE(agent.events().empty());
}

TEST(Prompts, RenderWithoutPlaceholders) {
  Stagnant f;
  for (const std::string& p : {render_understanding_prompt(f.cfg), render_plan_prompt(f.cfg, f.und),
                               render_inner_prompt(f.inner()), render_outer_prompt(f.outer())}) {
    EXPECT_FALSE(p.empty());
    EXPECT_EQ(p.find("{{"), std::string::npos);
  }
  EXPECT_NE(render_outer_prompt(f.outer()).find(f.report.issues[0].evidence), std::string::npos);
  for (const char* name : {"circuit_understanding", "metric_impact_section", "space_plan", "orchestration", "regeneration"})
    EXPECT_FALSE(prompt_asset(name).empty()) << name;
}
