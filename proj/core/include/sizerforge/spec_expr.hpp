#pragma once

// Specification-metric expressions, e.g.
//
//   fom > 0.100 AND dc_gain_db > 55 AND ugbw > 10 AND power_dc < 50
//
// Grammar:  expr := cmp ('AND' cmp)*      cmp := ident op number
//           op   := '>' | '>=' | '<' | '<='
// AND is case-insensitive. OR, NOT and parentheses are rejected.

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sizerforge {

enum class CompareOp { Greater, GreaterEqual, Less, LessEqual };

std::string_view to_string(CompareOp op);

/// True for > and >=, i.e. the metric belongs to the maximise set.
bool is_lower_bound(CompareOp op);

struct Comparison {
  std::string metric;
  CompareOp op = CompareOp::Greater;
  double threshold = 0.0;

  bool holds(double value) const;
  friend bool operator==(const Comparison&, const Comparison&) = default;
};

struct SpecExpr {
  std::vector<Comparison> clauses;

  friend bool operator==(const SpecExpr&, const SpecExpr&) = default;
};

/// Canonical text form; parse_spec(to_string(e)) == e.
std::string to_string(const SpecExpr& spec);

/// Throws Error{SpecParseError} (message carries the 0-based column) or
/// Error{UnsupportedCombinator}.
SpecExpr parse_spec(std::string_view text);

struct ClauseResult {
  Comparison clause;
  double value = 0.0;
  bool pass = false;
};

struct SpecVerdict {
  bool pass = false;
  std::vector<ClauseResult> clauses;
};

/// Exact floating comparisons. Throws Error{MissingMetric} when a clause's
/// metric is absent.
SpecVerdict evaluate_spec(const SpecExpr& spec, const std::map<std::string, double>& metrics);

struct MetricTarget {
  std::string metric;
  double target = 0.0;
  CompareOp op = CompareOp::Greater;
};

/// Maximise set (clauses with > / >=) and minimise set (< / <=), in
/// declaration order.
struct SpecDirections {
  std::vector<MetricTarget> maximize;
  std::vector<MetricTarget> minimize;
};

SpecDirections split_directions(const SpecExpr& spec);

}  // namespace sizerforge
