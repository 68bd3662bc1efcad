#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sizerforge/agents.hpp"
#include "sizerforge/bench_config.hpp"
#include "sizerforge/diagnostics.hpp"
#include "sizerforge/evaluation.hpp"
#include "sizerforge/history.hpp"
#include "sizerforge/search_space.hpp"

namespace sizerforge {

struct RunOptions {
  std::size_t budget = 300;
  std::size_t inner_cap = 100;
  std::size_t outer_cap = 3;
  /// Checked between batches; 0 disables.
  double wall_clock_limit_s = 0.0;
  std::uint64_t seed = 0;

  // Ablation toggles (circuit understanding, search-space definition,
  // orchestrated exploration, search-space regeneration loop).
  bool use_cu = true;
  bool use_ssd = true;
  bool use_oe = true;
  bool use_srl = true;

  std::size_t workers = 1;
  /// Shared result cache (may be null).
  ResultCache* cache = nullptr;
  /// Simulator logs are kept here when set.
  std::string log_dir;
  DiagnosticsParams diagnostics;
};

struct RunResult {
  /// Best feasible record if any, else the max-FoM record.
  std::optional<EvaluatedDesign> best;
  /// Max-FoM record (best_so_far); equals `best` unless a higher-FoM design
  /// misses the spec.
  std::optional<EvaluatedDesign> max_fom;
  bool feasible_found = false;
  std::size_t evals_used = 0;
  std::uint64_t evals_to_best = 0;
  double wall_time = 0.0;
  double sim_time = 0.0;
  int outer_loops_used = 0;
  std::vector<SearchSpace> space_generations;
  /// Ordered decision log; deterministic for the rule and replay backends.
  nlohmann::json decisions = nlohmann::json::array();
  /// Diagnostics text report at the end of every outer loop.
  std::vector<std::string> loop_reports;
  std::string stop_reason;
  /// "ok" or "NoValidDesign".
  std::string outcome = "ok";
  std::vector<AgentEvent> agent_events;
  History history;
};

/// The two-loop search. Configuration errors propagate; evaluator and agent
/// failures degrade without aborting.
RunResult run(const BenchmarkConfig& config, Evaluator& evaluator, DecisionAgent& agent, const RunOptions& options);

/// Single-loop search over the full grid with a fixed preset: ga_baseline,
/// bo_baseline, turbo_baseline or lhs.
RunResult run_baseline(const BenchmarkConfig& config, Evaluator& evaluator, const std::string& algorithm,
                       const RunOptions& options);

nlohmann::json space_to_json(const SearchSpace& space);
/// Per-generation snapshots with the changes from the previous generation.
nlohmann::json spaces_to_json(const std::vector<SearchSpace>& generations);
nlohmann::json run_summary_json(const RunResult& result, const BenchmarkConfig& config);

/// Writes run.json, decisions.json, history.jsonl, spaces.json and
/// reports/loop_<k>.txt under `dir`. Throws Error{IoError}.
void write_run_outputs(const RunResult& result, const BenchmarkConfig& config, const std::string& dir);

}  // namespace sizerforge
