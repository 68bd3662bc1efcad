#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sizerforge/history.hpp"
#include "sizerforge/search_space.hpp"

namespace sizerforge {

struct DiagnosticsParams {
  std::size_t top_k = 10;
  std::size_t stagnation_iters = 3;
  double improvement_threshold_pct = 2.0;
  /// Summaries back for the "recent" improvement (1 = last vs previous).
  std::size_t improvement_window = 1;
  double medium_fraction = 0.6;
  double high_fraction = 0.9;
  /// A variable is converged when one value holds more than this share.
  double converged_fraction = 0.7;
};

enum class Severity { Low, Medium, High };
std::string_view to_string(Severity s);

enum class IssueKind { BoundaryLower, BoundaryUpper, Stagnation };
std::string_view to_string(IssueKind k);

struct Issue {
  IssueKind kind = IssueKind::Stagnation;
  /// Empty for stagnation.
  std::string variable;
  /// Boundary: designs at the extreme out of `of`. Stagnation: iterations
  /// the best FoM has been unchanged.
  std::size_t count = 0;
  std::size_t of = 0;
  /// The extreme value (boundary) or the stuck FoM (stagnation).
  double value = 0.0;
  Severity severity = Severity::Medium;
  std::string evidence;
};

enum class ConvergenceStatus { Improving, Converging, Stagnant };
std::string_view to_string(ConvergenceStatus s);

struct VariableImpact {
  std::string variable;
  double min = 0.0;
  double max = 0.0;
  /// (value, count), count descending then value ascending.
  std::vector<std::pair<double, std::size_t>> frequencies;
  bool converged = false;
};

struct Recommendation {
  /// consider_stopping | expand_lower | expand_upper | expand_both |
  /// keep_ranges | escape_stagnation | unfix_or_change_strategy
  std::string kind;
  std::vector<std::string> variables;
  std::string text;
};

struct DiagnosticsReport {
  // Optimization status
  std::size_t iterations = 0;
  std::size_t designs_evaluated = 0;
  std::size_t valid_designs = 0;
  /// (method, designs) in order of first use.
  std::vector<std::pair<std::string, std::size_t>> methods_used;
  Fom best_fom;
  int best_iteration = 0;
  bool feasible_found = false;

  // Convergence
  std::vector<Fom> progression;
  ConvergenceStatus status = ConvergenceStatus::Improving;
  std::string reason;
  std::optional<double> recent_improvement_pct;
  /// Length of the trailing run of equal best values.
  std::size_t unchanged_iterations = 0;

  std::vector<Issue> issues;
  std::vector<VariableImpact> impact;

  Severity priority = Severity::Low;
  bool should_regenerate = false;
  std::vector<Recommendation> actions;

  std::size_t top_k_used = 0;
};

/// Pure function of (history, space, params). Throws Error{EmptyHistory}
/// when no iteration summary exists.
DiagnosticsReport analyze(const History& history, const SearchSpace& space, const DiagnosticsParams& params = {});

/// Per active variable (sorted by name) over the top-k valid designs of the
/// space.
std::vector<VariableImpact> variable_impact(const History& history, const SearchSpace& space, std::size_t top_k,
                                            double converged_fraction = 0.7);

/// The five-section human-readable report.
std::string to_text(const DiagnosticsReport& report);
nlohmann::json to_json(const DiagnosticsReport& report);

}  // namespace sizerforge
