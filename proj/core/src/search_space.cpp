#include "sizerforge/search_space.hpp"

#include <algorithm>
#include <cmath>

#include "sizerforge/bench_config.hpp"
#include "sizerforge/error.hpp"
#include "sizerforge/numeric.hpp"

namespace sizerforge {

namespace {

[[noreturn]] void illegal(const std::string& why) { throw Error(ErrorCode::IllegalEdit, why); }

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) return false;
  }
  return true;
}

}  // namespace

SearchSpace SearchSpace::full(const std::vector<std::string>& variables, const std::vector<double>& grid) {
  std::map<std::string, std::vector<double>> active;
  for (const auto& v : variables) active[v] = grid;
  return from_lists(variables, grid, active, {});
}

SearchSpace SearchSpace::full(const BenchmarkConfig& config) { return full(config.variables, config.w_values); }

SearchSpace SearchSpace::from_lists(const std::vector<std::string>& variables, const std::vector<double>& grid,
                                    const std::map<std::string, std::vector<double>>& active,
                                    const std::map<std::string, double>& fixed, int generation) {
  SearchSpace s;
  s.variables_ = variables;
  s.grid_ = grid;
  s.active_ = active;
  s.fixed_ = fixed;
  s.generation_ = generation;
  s.check_invariants();
  return s;
}

void SearchSpace::check_invariants() const {
  if (!strictly_increasing(grid_)) illegal("grid must be strictly increasing");
  for (const auto& [var, levels] : active_) {
    if (std::find(variables_.begin(), variables_.end(), var) == variables_.end()) illegal("unknown variable " + var);
    if (fixed_.count(var)) illegal(var + " is both active and fixed");
    if (levels.empty()) illegal(var + " has no values");
    if (!strictly_increasing(levels)) illegal(var + " values must be strictly increasing");
    for (double v : levels) {
      if (!grid_index(v)) throw Error(ErrorCode::ValueOffGrid, var + " value " + format_number(v) + " is off grid");
    }
  }
  for (const auto& [var, pin] : fixed_) {
    if (std::find(variables_.begin(), variables_.end(), var) == variables_.end()) illegal("unknown variable " + var);
    if (!grid_index(pin)) throw Error(ErrorCode::ValueOffGrid, var + " pin " + format_number(pin) + " is off grid");
  }
  for (const auto& var : variables_) {
    if (!active_.count(var) && !fixed_.count(var)) illegal(var + " is neither active nor fixed");
  }
}

SearchSpace SearchSpace::next() const {
  SearchSpace s = *this;
  s.generation_ = generation_ + 1;
  return s;
}

std::vector<std::string> SearchSpace::active_names() const {
  std::vector<std::string> out;
  for (const auto& v : variables_) {
    if (active_.count(v)) out.push_back(v);
  }
  return out;
}

std::vector<std::string> SearchSpace::fixed_names() const {
  std::vector<std::string> out;
  for (const auto& v : variables_) {
    if (fixed_.count(v)) out.push_back(v);
  }
  return out;
}

std::uint64_t SearchSpace::cardinality() const {
  std::uint64_t n = 1;
  for (const auto& [var, levels] : active_) n *= levels.size();
  return n;
}

std::uint64_t SearchSpace::full_cardinality() const {
  std::uint64_t n = 1;
  for (std::size_t i = 0; i < variables_.size(); ++i) n *= grid_.size();
  return n;
}

Reduction SearchSpace::reduction() const { return {full_cardinality(), cardinality()}; }

std::optional<std::size_t> SearchSpace::grid_index(double value) const {
  auto it = std::find(grid_.begin(), grid_.end(), value);
  if (it == grid_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - grid_.begin());
}

Design SearchSpace::design_from_indices(const std::vector<std::size_t>& idx) const {
  Assignment a;
  const auto names = active_names();
  for (std::size_t k = 0; k < names.size(); ++k) a[names[k]] = active_.at(names[k]).at(idx.at(k));
  for (const auto& [var, pin] : fixed_) a[var] = pin;
  return Design(std::move(a));
}

std::optional<std::vector<std::size_t>> SearchSpace::indices_of(const Design& design) const {
  if (!sample_validate(*this, design)) return std::nullopt;
  std::vector<std::size_t> idx;
  for (const auto& var : active_names()) {
    const auto& levels = active_.at(var);
    idx.push_back(static_cast<std::size_t>(std::find(levels.begin(), levels.end(), design.at(var)) - levels.begin()));
  }
  return idx;
}

Design SearchSpace::project(const Design& design) const {
  Assignment a;
  for (const auto& var : variables_) {
    if (auto f = fixed_.find(var); f != fixed_.end()) {
      a[var] = f->second;
      continue;
    }
    const auto& levels = active_.at(var);
    auto it = design.assignment().find(var);
    if (it == design.assignment().end()) {
      a[var] = levels[levels.size() / 2];
      continue;
    }
    double best = levels.front();
    for (double v : levels) {
      if (std::abs(v - it->second) < std::abs(best - it->second)) best = v;
    }
    a[var] = best;
  }
  return Design(std::move(a));
}

std::vector<Design> SearchSpace::enumerate(std::uint64_t limit) const {
  std::vector<Design> out;
  const auto names = active_names();
  std::vector<std::size_t> idx(names.size(), 0);
  const std::uint64_t total = cardinality();
  for (std::uint64_t n = 0; n < total && n < limit; ++n) {
    out.push_back(design_from_indices(idx));
    for (std::size_t k = names.size(); k-- > 0;) {
      if (++idx[k] < active_.at(names[k]).size()) break;
      idx[k] = 0;
    }
  }
  return out;
}

SearchSpace SearchSpace::expand(const std::string& var, bool lower, std::size_t count) const {
  if (!is_active(var)) illegal("cannot expand " + var + ": not active");
  if (count == 0) illegal("expansion count must be positive");
  SearchSpace s = next();
  auto& levels = s.active_.at(var);
  const std::size_t edge = *grid_index(lower ? levels.front() : levels.back());
  std::vector<double> added;
  if (lower) {
    if (edge == 0) illegal(var + " lower range is at grid end (boundary unexpandable)");
    for (std::size_t k = 1; k <= count && k <= edge; ++k) added.push_back(grid_[edge - k]);
  } else {
    if (edge + 1 >= grid_.size()) illegal(var + " upper range is at grid end (boundary unexpandable)");
    for (std::size_t k = 1; k <= count && edge + k < grid_.size(); ++k) added.push_back(grid_[edge + k]);
  }
  levels.insert(levels.end(), added.begin(), added.end());
  std::sort(levels.begin(), levels.end());
  s.check_invariants();
  return s;
}

SearchSpace SearchSpace::narrow(const std::string& var, const std::vector<double>& values) const {
  if (!is_active(var)) illegal("cannot narrow " + var + ": not active");
  if (values.size() < 2) illegal("narrowing " + var + " below 2 values");
  const auto& levels = active_.at(var);
  auto start = std::find(levels.begin(), levels.end(), values.front());
  if (start == levels.end() || static_cast<std::size_t>(levels.end() - start) < values.size() ||
      !std::equal(values.begin(), values.end(), start)) {
    illegal("narrowed values for " + var + " must be a contiguous run of its active list");
  }
  SearchSpace s = next();
  s.active_[var] = values;
  s.check_invariants();
  return s;
}

SearchSpace SearchSpace::unfix(const std::string& var, std::size_t window) const {
  if (is_active(var)) illegal("cannot unfix " + var + ": already active");
  if (!is_fixed(var)) illegal("cannot unfix " + var + ": unknown variable");
  if (window < 2) illegal("unfix window must hold at least 2 values");
  const std::size_t n = grid_.size();
  const std::size_t w = std::min(window, n);
  const std::size_t pin = *grid_index(fixed_.at(var));
  // Centre on the pin, then slide the window back inside the grid.
  std::size_t lo = pin >= w / 2 ? pin - w / 2 : 0;
  if (lo + w > n) lo = n - w;
  SearchSpace s = next();
  s.fixed_.erase(var);
  s.active_[var] = std::vector<double>(grid_.begin() + static_cast<std::ptrdiff_t>(lo),
                                       grid_.begin() + static_cast<std::ptrdiff_t>(lo + w));
  s.check_invariants();
  return s;
}

SearchSpace SearchSpace::fix(const std::string& var, double value) const {
  if (is_fixed(var)) illegal("cannot fix " + var + ": already fixed");
  if (!is_active(var)) illegal("cannot fix " + var + ": unknown variable");
  if (!grid_index(value)) illegal(var + " pin " + format_number(value) + " is off grid");
  SearchSpace s = next();
  s.active_.erase(var);
  s.fixed_[var] = value;
  s.check_invariants();
  return s;
}

SearchSpace SearchSpace::set_active(const std::string& var, const std::vector<double>& values) const {
  if (std::find(variables_.begin(), variables_.end(), var) == variables_.end()) illegal("unknown variable " + var);
  if (values.size() < 2) illegal(var + " needs at least 2 values");
  SearchSpace s = next();
  s.fixed_.erase(var);
  s.active_[var] = values;
  s.check_invariants();
  return s;
}

bool sample_validate(const SearchSpace& space, const Design& design) {
  const auto& a = design.assignment();
  if (a.size() != space.variables().size()) return false;
  for (const auto& var : space.variables()) {
    auto it = a.find(var);
    if (it == a.end()) return false;
    if (space.is_fixed(var)) {
      if (it->second != space.fixed().at(var)) return false;
    } else {
      const auto& levels = space.levels(var);
      if (std::find(levels.begin(), levels.end(), it->second) == levels.end()) return false;
    }
  }
  return true;
}

std::string_view to_string(SpaceAction a) {
  switch (a) {
    case SpaceAction::ContinueCurrent: return "continue_current";
    case SpaceAction::ExpandRanges: return "expand_ranges";
    case SpaceAction::NarrowRanges: return "narrow_ranges";
    case SpaceAction::UnfixVariables: return "unfix_variables";
    case SpaceAction::ChangeFocus: return "change_focus";
    case SpaceAction::Converged: return "converged";
  }
  return "continue_current";
}

std::optional<SpaceAction> space_action_from_string(std::string_view s) {
  for (auto a : {SpaceAction::ContinueCurrent, SpaceAction::ExpandRanges, SpaceAction::NarrowRanges,
                 SpaceAction::UnfixVariables, SpaceAction::ChangeFocus, SpaceAction::Converged}) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

std::string_view to_string(ChangeKind k) {
  switch (k) {
    case ChangeKind::ExpandLower: return "expand_lower";
    case ChangeKind::ExpandUpper: return "expand_upper";
    case ChangeKind::Narrow: return "narrow";
    case ChangeKind::Unfix: return "unfix";
    case ChangeKind::Fix: return "fix";
    case ChangeKind::SetActive: return "set_active";
  }
  return "narrow";
}

SearchSpace apply_edit(const SearchSpace& space, const SpaceEdit& edit) {
  if ((edit.action == SpaceAction::ContinueCurrent || edit.action == SpaceAction::Converged) &&
      !edit.changes.empty()) {
    illegal(std::string(to_string(edit.action)) + " must not carry changes");
  }
  SearchSpace s = space;
  for (const auto& c : edit.changes) {
    switch (c.kind) {
      case ChangeKind::ExpandLower: s = s.expand(c.variable, true, c.count); break;
      case ChangeKind::ExpandUpper: s = s.expand(c.variable, false, c.count); break;
      case ChangeKind::Narrow: s = s.narrow(c.variable, c.values); break;
      case ChangeKind::Unfix: s = s.unfix(c.variable, c.count); break;
      case ChangeKind::Fix: s = s.fix(c.variable, c.value); break;
      case ChangeKind::SetActive: s = s.set_active(c.variable, c.values); break;
    }
  }
  return SearchSpace::from_lists(s.variables(), s.grid(), s.active(), s.fixed(), space.generation() + 1);
}

}  // namespace sizerforge
