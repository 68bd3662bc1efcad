#pragma once

#include <map>
#include <string>

#include "sizerforge/design.hpp"
#include "sizerforge/spec_expr.hpp"

namespace sizerforge {

/// Name of the engine-computed figure of merit when it appears in a spec.
inline constexpr const char* kFomMetric = "fom";

/// FoM = prod_{i in maximize} (y_i / t_i) / prod_{j in minimize} (y_j / t_j).
///
/// The `fom` metric never enters the products. Returns Failed when a
/// normalised value is <= 0 or non-finite (this also covers a zero
/// denominator). Throws Error{MissingMetric} or Error{InvalidThreshold}.
Fom compute_fom(const SpecDirections& dirs, const std::map<std::string, double>& raw_metrics);

struct Assessment {
  Fom fom;
  bool feasible = false;
  std::map<std::string, double> normalized;
};

/// FoM plus feasibility under the user's literal expression. A `fom` clause
/// is checked against the engine's FoM; a simulator-reported `fom` that
/// differs by more than 1% is logged and overridden.
Assessment assess(const SpecExpr& spec, const std::map<std::string, double>& raw_metrics);

}  // namespace sizerforge
