#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sizerforge/design.hpp"
#include "sizerforge/spec_expr.hpp"

namespace sizerforge {

struct WidthScale {
  std::string base;
  double multiplier = 1.0;

  friend bool operator==(const WidthScale&, const WidthScale&) = default;
};

/// One circuit-sizing task as read from a benchmark config document.
///
/// Required keys: `user_specs_metric`, `variable`, `W_values`, `metrics`,
/// `subckt_name`, `ota_subckt_template` (alias `subckt_template`) and
/// `testbench_template`. Keys the engine does not interpret are kept in
/// `passthrough` as YAML text so the document survives a round trip.
struct BenchmarkConfig {
  std::string name;
  std::string pdk_lib_path;
  std::string results_dir;
  std::string user_specs;
  std::string user_specs_metric;
  SpecExpr spec;

  /// Insertion order of `params` is kept in `param_order`.
  std::map<std::string, double> params;
  std::vector<std::string> param_order;

  std::vector<std::string> variables;
  std::vector<double> w_values;
  std::map<std::string, WidthScale> width_scales;
  std::vector<std::string> width_scale_order;

  std::string subckt_name;
  std::vector<std::string> subckt_pins;
  std::map<std::string, std::string> testbench_signals;
  std::vector<std::string> metrics;
  /// Factor applied to scraped simulator values (e.g. ugbw Hz -> MHz).
  std::map<std::string, double> metric_scales;

  std::string subckt_template;
  std::string testbench_template;

  std::map<std::string, std::string> passthrough;

  /// Scalar passthrough value (quotes stripped), or `fallback`.
  std::string passthrough_scalar(std::string_view key, std::string_view fallback = {}) const;

  std::size_t full_grid_cardinality() const;

  friend bool operator==(const BenchmarkConfig&, const BenchmarkConfig&) = default;
};

/// Throws Error with MissingKey, BadScaleRef, NonMonotonicGrid,
/// TemplateUnresolvable, ConfigInvalid or a forwarded SpecParseError.
BenchmarkConfig parse_config(std::string_view source, std::string_view name = {});

BenchmarkConfig load_config(const std::string& path);

/// Emits a document that parse_config reads back to an equal config.
std::string serialize_config(const BenchmarkConfig& config);

struct RenderedDeck {
  std::string netlist_text;
  std::string testbench_text;
  std::map<std::string, std::string> substitutions;
};

/// Derived widths and parameter values for a base-variable assignment.
std::map<std::string, double> resolve_widths(const BenchmarkConfig& config, const Assignment& assignment);

/// Pure: identical inputs give byte-identical decks. `corner` feeds the
/// optional `{corner}` slot.
RenderedDeck render_deck(const BenchmarkConfig& config, const Assignment& assignment,
                         std::string_view corner = "tt");

}  // namespace sizerforge
