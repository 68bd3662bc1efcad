#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sizerforge/bench_config.hpp"
#include "sizerforge/diagnostics.hpp"
#include "sizerforge/history.hpp"
#include "sizerforge/llm.hpp"
#include "sizerforge/optimizers.hpp"
#include "sizerforge/search_space.hpp"

namespace sizerforge {

struct CircuitUnderstanding {
  std::string topology_overview;
  std::string variable_mapping;
  /// metric -> qualitative impact text.
  std::map<std::string, std::string> metric_impact;
  std::string interactions;
  std::vector<std::string> key_insights;
  /// variable -> critical | high | medium | low.
  std::map<std::string, std::string> sensitivity;
  std::string source = "rule";
};

struct RankedVariable {
  int rank = 0;
  std::string variable;
  std::string impact;
  std::string reasoning;
};

struct PlanVariable {
  int rank = 0;
  std::vector<double> values;
  std::string sensitivity = "medium";
  std::string reasoning;
};

struct PlanFixed {
  int rank = 0;
  double value = 0.0;
  std::string risk = "medium";
  std::string reasoning;
};

struct SpacePlan {
  std::string target;
  std::vector<RankedVariable> ranking;
  std::map<std::string, PlanVariable> optimize;
  std::map<std::string, PlanFixed> fixed;
  /// Notes on values snapped to the grid and similar repairs.
  std::vector<std::string> repairs;
  std::string source = "rule";
};

/// Builds the space a plan describes. Throws Error{PlanIncomplete} or
/// Error{IllegalPlan}.
SearchSpace plan_to_space(const SpacePlan& plan, const BenchmarkConfig& config, int generation);

struct BudgetState {
  std::size_t total = 300;
  std::size_t used = 0;
  std::size_t inner_cap = 100;
  std::size_t inner_used = 0;

  std::size_t remaining() const;
};

struct InnerContext {
  const BenchmarkConfig* config = nullptr;
  const History* history = nullptr;
  const SearchSpace* space = nullptr;
  const DiagnosticsReport* report = nullptr;
  BudgetState budget;
  /// Iterations already run in the current inner loop.
  int loop_iterations = 0;
  /// Distinct methods used in the current inner loop.
  std::set<std::string> loop_methods;
  std::string previous_method;
  std::uint64_t seed = 0;
};

struct InnerDecision {
  bool stop = false;
  MethodConfig method;
  std::string reasoning;
  std::string confidence = "medium";
  std::string expected_improvement;
  std::string convergence_assessment;
  std::string source = "rule";
};

struct OuterContext {
  const BenchmarkConfig* config = nullptr;
  const History* history = nullptr;
  const SearchSpace* space = nullptr;
  const DiagnosticsReport* report = nullptr;
  const CircuitUnderstanding* understanding = nullptr;
  BudgetState budget;
  int iterations_completed = 0;
  /// The previous outer decision was driven by stagnation.
  bool previous_was_stagnation = false;
};

struct OuterDecision {
  SpaceAction action = SpaceAction::ContinueCurrent;
  /// Rule decisions carry an edit; LLM decisions carry a full plan.
  SpaceEdit edit;
  std::optional<SpacePlan> plan;
  bool stagnation_driven = false;
  std::string reasoning;
  std::string confidence = "medium";
  std::string source = "rule";
};

/// The space the decision leads to (generation + 1 unless nothing changes).
SearchSpace apply_outer(const OuterDecision& decision, const SearchSpace& space, const BenchmarkConfig& config);

// Deterministic rule policies.

CircuitUnderstanding rule_understand(const BenchmarkConfig& config);
/// The top n_to_optimize variables (0 means min(4, total)) by sensitivity,
/// then declaration order, get five evenly spaced grid values including
/// both extremes; the rest are fixed at the grid median.
SpacePlan rule_plan(const BenchmarkConfig& config, const CircuitUnderstanding& understanding,
                    std::size_t n_to_optimize = 0);
InnerDecision rule_decide_inner(const InnerContext& ctx);
OuterDecision rule_decide_outer(const OuterContext& ctx);

/// Sample-size rule: clamp(fraction * cardinality, floor, cap) with cap the
/// remaining budget and unevaluated designs.
std::size_t sample_size(double fraction, std::size_t floor, std::uint64_t cardinality, std::size_t cap);

// LLM response handling.

enum class AgentSchema { Understanding, Plan, Inner, Outer };

/// Strips fences and comments, trims to the outermost object, parses and
/// checks field names, types and enums (numeric strings are coerced).
/// Throws Error{JsonUnparseable} or Error{SchemaViolation}.
nlohmann::json parse_agent_json(const std::string& raw, AgentSchema schema);

CircuitUnderstanding parse_understanding(const std::string& raw, const BenchmarkConfig& config);
/// Off-grid values are snapped (logged in repairs). Throws IllegalPlan /
/// PlanIncomplete on semantic problems.
SpacePlan parse_plan(const std::string& raw, const BenchmarkConfig& config);
InnerDecision parse_inner(const std::string& raw);
OuterDecision parse_outer(const std::string& raw, const BenchmarkConfig& config);

// Prompt rendering.

std::string render_understanding_prompt(const BenchmarkConfig& config);
std::string render_plan_prompt(const BenchmarkConfig& config, const CircuitUnderstanding& understanding,
                               std::size_t n_to_optimize = 0);
std::string render_inner_prompt(const InnerContext& ctx);
std::string render_outer_prompt(const OuterContext& ctx);

/// Raw prompt assets by name: circuit_understanding, metric_impact_section,
/// space_plan, orchestration, regeneration.
const std::string& prompt_asset(const std::string& name);

struct AgentEvent {
  std::string kind;    // understand | plan | inner | outer
  std::string what;    // retry | fallback | repair
  std::string detail;
};

/// Routes the four decisions to the rule policy or to an LLM. LLM answers
/// that fail validation are retried once with the error echoed, then the
/// rule policy answers instead.
class DecisionAgent {
 public:
  explicit DecisionAgent(const BenchmarkConfig& config, std::shared_ptr<LlmClient> client = nullptr);

  bool uses_llm() const { return client_ != nullptr; }

  CircuitUnderstanding understand_circuit();
  SpacePlan plan_initial_space(const CircuitUnderstanding& understanding, std::size_t n_to_optimize = 0);
  InnerDecision decide_inner(const InnerContext& ctx);
  OuterDecision decide_outer(const OuterContext& ctx);

  const std::vector<AgentEvent>& events() const { return events_; }

 private:
  template <typename T, typename Parse, typename Rule>
  T ask(const std::string& kind, const std::string& prompt, Parse parse, Rule rule);

  const BenchmarkConfig& config_;
  std::shared_ptr<LlmClient> client_;
  std::vector<AgentEvent> events_;
};

nlohmann::json to_json(const CircuitUnderstanding& u);
nlohmann::json to_json(const SpacePlan& p);
nlohmann::json to_json(const InnerDecision& d);
nlohmann::json to_json(const OuterDecision& d);

}  // namespace sizerforge
