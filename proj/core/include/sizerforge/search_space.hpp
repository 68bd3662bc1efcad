#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sizerforge/design.hpp"

namespace sizerforge {

struct BenchmarkConfig;

/// Exact ratio full / current, kept as integers so ratio * current == full.
struct Reduction {
  std::uint64_t full = 1;
  std::uint64_t current = 1;

  double value() const { return static_cast<double>(full) / static_cast<double>(current); }
};

/// The optimisation domain: every config variable is either active (with an
/// ordered subset of its grid) or fixed at one grid value. Edits return a new
/// space with generation + 1 and leave the source untouched.
class SearchSpace {
 public:
  SearchSpace() = default;

  /// Every variable active over its full grid.
  static SearchSpace full(const std::vector<std::string>& variables, const std::vector<double>& grid);
  static SearchSpace full(const BenchmarkConfig& config);

  /// Validates membership and ordering. Active lists need >= 1 value here;
  /// edits and plans enforce the stronger >= 2.
  static SearchSpace from_lists(const std::vector<std::string>& variables, const std::vector<double>& grid,
                                const std::map<std::string, std::vector<double>>& active,
                                const std::map<std::string, double>& fixed, int generation = 0);

  const std::vector<std::string>& variables() const noexcept { return variables_; }
  /// Active variable names in config order.
  std::vector<std::string> active_names() const;
  std::vector<std::string> fixed_names() const;

  const std::map<std::string, std::vector<double>>& active() const noexcept { return active_; }
  const std::map<std::string, double>& fixed() const noexcept { return fixed_; }
  const std::vector<double>& grid() const noexcept { return grid_; }
  int generation() const noexcept { return generation_; }

  bool is_active(const std::string& var) const { return active_.count(var) > 0; }
  bool is_fixed(const std::string& var) const { return fixed_.count(var) > 0; }
  const std::vector<double>& levels(const std::string& var) const { return active_.at(var); }

  std::uint64_t cardinality() const;
  std::uint64_t full_cardinality() const;
  Reduction reduction() const;

  /// Position of `value` in the full grid, or nullopt.
  std::optional<std::size_t> grid_index(double value) const;

  /// Builds the design whose active variables take levels(var)[idx[k]] (in
  /// active_names() order) and whose fixed variables take their pins.
  Design design_from_indices(const std::vector<std::size_t>& idx) const;
  /// Inverse of design_from_indices for designs inside the space.
  std::optional<std::vector<std::size_t>> indices_of(const Design& design) const;
  /// Nearest-level projection of any grid design onto this space.
  Design project(const Design& design) const;

  /// Enumerates every design (row-major over active_names()).
  std::vector<Design> enumerate(std::uint64_t limit) const;

  // Edit primitives. Each returns a new space (generation + 1) or throws
  // Error{IllegalEdit}.
  /// Adds up to `count` grid values adjacent to the current extreme; throws
  /// when already at the grid end.
  SearchSpace expand(const std::string& var, bool lower, std::size_t count) const;
  /// Keeps `values` (a contiguous run of the active list, >= 2 values).
  SearchSpace narrow(const std::string& var, const std::vector<double>& values) const;
  /// Moves a fixed variable into the active set with `window` grid values
  /// centred on its pin (shifted to stay inside the grid).
  SearchSpace unfix(const std::string& var, std::size_t window) const;
  SearchSpace fix(const std::string& var, double value) const;
  /// Replaces the active list of a variable (active or fixed) with any
  /// strictly increasing grid subset of >= 2 values.
  SearchSpace set_active(const std::string& var, const std::vector<double>& values) const;

  friend bool operator==(const SearchSpace&, const SearchSpace&) = default;

 private:
  void check_invariants() const;
  SearchSpace next() const;

  std::vector<std::string> variables_;
  std::vector<double> grid_;
  std::map<std::string, std::vector<double>> active_;
  std::map<std::string, double> fixed_;
  int generation_ = 0;
};

/// True iff fixed variables match their pins exactly and active values are
/// in their active lists.
bool sample_validate(const SearchSpace& space, const Design& design);

enum class SpaceAction { ContinueCurrent, ExpandRanges, NarrowRanges, UnfixVariables, ChangeFocus, Converged };

std::string_view to_string(SpaceAction a);
std::optional<SpaceAction> space_action_from_string(std::string_view s);

enum class ChangeKind { ExpandLower, ExpandUpper, Narrow, Unfix, Fix, SetActive };

std::string_view to_string(ChangeKind k);

struct SpaceChange {
  ChangeKind kind = ChangeKind::ExpandLower;
  std::string variable;
  /// ExpandLower/ExpandUpper: values to add; Unfix: window size.
  std::size_t count = 0;
  /// Narrow / SetActive: the resulting list.
  std::vector<double> values;
  /// Fix: the pin.
  double value = 0.0;
};

struct SpaceEdit {
  SpaceAction action = SpaceAction::ContinueCurrent;
  std::vector<SpaceChange> changes;
  std::string rationale;
};

/// Applies every change in order. ContinueCurrent/Converged must carry no
/// changes. Throws Error{IllegalEdit}.
SearchSpace apply_edit(const SearchSpace& space, const SpaceEdit& edit);

}  // namespace sizerforge
