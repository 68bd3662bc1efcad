#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sizerforge/bench_config.hpp"
#include "sizerforge/controller.hpp"

namespace sizerforge {

struct MethodSpec {
  /// autosizer | ga_baseline | bo_baseline | turbo_baseline | lhs
  std::string name = "autosizer";
  /// autosizer only: rule | llm | replay:<dir>
  std::string backend = "rule";
  bool use_cu = true;
  bool use_ssd = true;
  bool use_oe = true;
  bool use_srl = true;

  /// Column label, e.g. "autosizer(rule)".
  std::string label() const;
};

struct TrialMatrix {
  /// Config paths (relative to the matrix file) or "surrogate:<model-id>".
  std::vector<std::string> circuits;
  std::vector<MethodSpec> methods;
  std::size_t trials = 3;
  /// Explicit seeds (size == trials) or empty to use base_seed + k.
  std::vector<std::uint64_t> seeds;
  std::uint64_t base_seed = 0;
  std::size_t budget = 300;
  std::size_t inner_cap = 100;
  std::size_t outer_cap = 3;
  /// "", "spice" or "surrogate".
  std::string evaluator;
  std::size_t workers = 1;
  /// Per-trial outputs go under <results_dir>/runs when set.
  std::string results_dir;
  /// Directory the relative circuit paths are resolved against.
  std::string base_dir;

  std::vector<std::uint64_t> trial_seeds() const;
};

/// Throws Error{ConfigInvalid} or Error{MissingKey}.
TrialMatrix parse_matrix(const std::string& text, const std::string& base_dir = {});
TrialMatrix load_matrix(const std::string& path);

/// Resolves one matrix circuit entry to a config.
BenchmarkConfig load_circuit(const std::string& entry, const std::string& base_dir);

struct TrialResult {
  std::string circuit;
  std::string method;
  std::uint64_t seed = 0;
  /// False when the trial threw or found no valid design.
  bool valid = false;
  std::string error;
  double best_fom = 0.0;
  bool feasible_reported = false;
  /// Re-derived from the best record's raw metrics through evaluate_spec.
  bool spec_pass = false;
  std::uint64_t evals_to_best = 0;
  std::size_t evals_used = 0;
  double wall_time = 0.0;
  double sim_time = 0.0;
  int outer_loops_used = 0;
  std::vector<std::pair<std::uint64_t, double>> trajectory;
  std::vector<SearchSpace> spaces;
  std::map<std::string, double> best_raw_metrics;
};

struct CellSummary {
  std::string circuit;
  std::string method;
  std::size_t trials = 0;
  std::size_t valid_trials = 0;
  double fom_mean = 0.0, fom_std = 0.0;
  double evals_mean = 0.0, evals_std = 0.0;
  double time_mean_s = 0.0, time_std_s = 0.0;
  double sr_pct = 0.0;
};

struct MatrixReport {
  std::vector<TrialResult> trials;
  std::vector<CellSummary> cells;
};

/// Outcome of one trial from its run result and config.
TrialResult summarize_trial(const RunResult& run, const BenchmarkConfig& config, const std::string& circuit,
                            const std::string& method, std::uint64_t seed);

/// Mean and sample std over valid trials; SR over all trials.
CellSummary summarize_cell(const std::vector<TrialResult>& trials);

/// Spec check on raw metrics, with the engine FoM supplied for a fom clause.
bool spec_satisfied(const BenchmarkConfig& config, const std::map<std::string, double>& raw_metrics);

/// Runs every circuit x method x seed. Per-trial failures are recorded, never thrown.
MatrixReport run_matrix(const TrialMatrix& matrix);

std::string render_table(const MatrixReport& report);
nlohmann::json report_to_json(const MatrixReport& report);
MatrixReport report_from_json(const nlohmann::json& j);

/// Writes results.json, table.txt, trajectories.csv and space_ranges.csv.
void emit_reports(const MatrixReport& report, const std::string& dir);

}  // namespace sizerforge
