#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sizerforge/design.hpp"
#include "sizerforge/spec_expr.hpp"

namespace sizerforge {

using MetricMap = std::map<std::string, double>;

/// Closed-form benchmark standing in for a simulator. Formulas take the
/// base-variable assignment and apply their own width multipliers.
struct SurrogateModel {
  std::string id;
  std::vector<std::string> variables;
  std::vector<double> grid;
  std::string spec;
  std::function<MetricMap(const Assignment&)> formula;
};

/// sota_easy, sota_med, sota_hard.
std::vector<std::string> surrogate_model_ids();
/// Throws Error{UnknownModel}.
const SurrogateModel& surrogate_model(std::string_view id);

/// Deterministic metrics; `noise` > 0 applies a relative perturbation of at
/// most +-noise derived from a hash of (model, assignment, metric).
MetricMap surrogate_eval(std::string_view id, const Assignment& assignment, double noise = 0.0);

struct OracleResult {
  Design best;
  Fom fom;
  bool best_feasible = false;
  MetricMap best_metrics;
  std::uint64_t feasible_count = 0;
  std::uint64_t total = 0;
};

/// Exhaustive enumeration through the production assess path; ties keep
/// the earliest point in row-major order. `spec_override` replaces the
/// model's spec. Throws Error{GridTooLarge} above 10^6 points.
OracleResult enumerate_oracle(const SurrogateModel& model, const std::optional<SpecExpr>& spec_override = {});

/// YAML config for a model (surrogate evaluator, trivial decks).
std::string surrogate_config_yaml(std::string_view id);

}  // namespace sizerforge
