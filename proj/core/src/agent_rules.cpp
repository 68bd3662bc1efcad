#include <algorithm>
#include <cmath>
#include <set>

#include "sizerforge/agents.hpp"
#include "sizerforge/error.hpp"
#include "sizerforge/numeric.hpp"

namespace sizerforge {

namespace {

int sensitivity_rank(const std::string& s) {
  if (s == "critical") return 0;
  if (s == "high") return 1;
  if (s == "medium") return 2;
  return 3;
}

// Variables ordered by sensitivity, ties in declaration order.
std::vector<std::string> by_sensitivity(const std::vector<std::string>& vars,
                                        const std::map<std::string, std::string>& sensitivity) {
  std::vector<std::string> out = vars;
  std::stable_sort(out.begin(), out.end(), [&](const std::string& a, const std::string& b) {
    auto ra = sensitivity.count(a) ? sensitivity_rank(sensitivity.at(a)) : 2;
    auto rb = sensitivity.count(b) ? sensitivity_rank(sensitivity.at(b)) : 2;
    return ra < rb;
  });
  return out;
}

std::vector<std::string> fixed_by_sensitivity(const OuterContext& ctx) {
  std::vector<std::string> fixed;
  for (const auto& v : ctx.space->variables())
    if (ctx.space->is_fixed(v)) fixed.push_back(v);
  static const std::map<std::string, std::string> none;
  return by_sensitivity(fixed, ctx.understanding ? ctx.understanding->sensitivity : none);
}

std::size_t unevaluated(const SearchSpace& space, const History& history) {
  std::uint64_t seen = 0;
  for (const auto& r : history.records())
    if (sample_validate(space, r.design)) ++seen;
  std::uint64_t card = space.cardinality();
  return seen >= card ? 0 : static_cast<std::size_t>(std::min<std::uint64_t>(card - seen, 1u << 30));
}

MethodConfig method(const std::string& name, std::size_t n, nlohmann::json params, std::uint64_t seed) {
  MethodConfig m;
  m.method = name;
  m.n_samples = n;
  m.parameters = std::move(params);
  m.seed = seed;
  return validate_method_config(m);
}

double top_k_std(const std::vector<const EvaluatedDesign*>& relevant, std::size_t k) {
  std::vector<double> f;
  for (const auto* r : relevant) f.push_back(r->fom.value());
  std::sort(f.rbegin(), f.rend());
  if (f.size() > k) f.resize(k);
  return sample_stddev(f);
}

}  // namespace

std::size_t BudgetState::remaining() const {
  std::size_t total_left = used >= total ? 0 : total - used;
  std::size_t inner_left = inner_used >= inner_cap ? 0 : inner_cap - inner_used;
  return std::min(total_left, inner_left);
}

std::size_t sample_size(double fraction, std::size_t floor, std::uint64_t cardinality, std::size_t cap) {
  auto n = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(cardinality)));
  return std::min(std::max(n, floor), cap);
}

SearchSpace plan_to_space(const SpacePlan& plan, const BenchmarkConfig& config, int generation) {
  for (const auto& [name, _] : plan.optimize)
    if (plan.fixed.count(name)) throw Error(ErrorCode::IllegalPlan, name + " is both optimized and fixed");
  auto check_name = [&](const std::string& name) {
    if (config.params.count(name)) throw Error(ErrorCode::IllegalPlan, name + " is a permanently fixed parameter");
    if (std::find(config.variables.begin(), config.variables.end(), name) == config.variables.end())
      throw Error(ErrorCode::IllegalPlan, "unknown variable " + name);
  };
  std::map<std::string, std::vector<double>> active;
  std::map<std::string, double> fixed;
  for (const auto& [name, v] : plan.optimize) {
    check_name(name);
    if (v.values.size() < 2) throw Error(ErrorCode::IllegalPlan, name + " needs at least 2 values");
    active[name] = v.values;
  }
  for (const auto& [name, f] : plan.fixed) {
    check_name(name);
    fixed[name] = f.value;
  }
  for (const auto& v : config.variables)
    if (!active.count(v) && !fixed.count(v)) throw Error(ErrorCode::PlanIncomplete, "plan does not place " + v);
  if (active.empty()) throw Error(ErrorCode::IllegalPlan, "plan optimizes no variable");
  try {
    return SearchSpace::from_lists(config.variables, config.w_values, active, fixed, generation);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ValueOffGrid || e.code() == ErrorCode::IllegalEdit)
      throw Error(ErrorCode::IllegalPlan, e.what());
    throw;
  }
}

SearchSpace apply_outer(const OuterDecision& decision, const SearchSpace& space, const BenchmarkConfig& config) {
  if (decision.action == SpaceAction::ContinueCurrent || decision.action == SpaceAction::Converged) return space;
  if (decision.plan) return plan_to_space(*decision.plan, config, space.generation() + 1);
  return apply_edit(space, decision.edit);
}

CircuitUnderstanding rule_understand(const BenchmarkConfig& config) {
  CircuitUnderstanding u;
  u.topology_overview = "Circuit " + config.subckt_name + " with " + std::to_string(config.variables.size()) +
                        " sizing variables; topology not analysed.";
  u.variable_mapping = "Variables map to device widths through the configured scaling rules.";
  for (const auto& m : config.metrics) u.metric_impact[m] = "not analysed";
  u.interactions = "not analysed";
  u.key_insights = {"no model-based analysis available",
                    "all variables are treated as equally sensitive",
                    "the search relies on sampling and diagnostics feedback"};
  for (const auto& v : config.variables) u.sensitivity[v] = "medium";
  u.source = "rule";
  return u;
}

SpacePlan rule_plan(const BenchmarkConfig& config, const CircuitUnderstanding& understanding,
                    std::size_t n_to_optimize) {
  SpacePlan plan;
  plan.target = config.user_specs_metric;
  const auto& grid = config.w_values;
  std::vector<double> spread;
  if (grid.size() <= 5) {
    spread = grid;
  } else {
    for (std::size_t k = 0; k < 5; ++k) spread.push_back(grid[(k * (grid.size() - 1) + 2) / 4]);
  }
  const double pin = grid[(grid.size() - 1) / 2];

  auto order = by_sensitivity(config.variables, understanding.sensitivity);
  const std::size_t n_active = n_to_optimize == 0 ? std::min<std::size_t>(4, order.size())
                                                  : std::min(n_to_optimize, order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& v = order[i];
    std::string s = understanding.sensitivity.count(v) ? understanding.sensitivity.at(v) : "medium";
    plan.ranking.push_back({static_cast<int>(i + 1), v, s, "rule ranking"});
    if (i < n_active)
      plan.optimize[v] = {static_cast<int>(i + 1), spread, s, "spread over the grid"};
    else
      plan.fixed[v] = {static_cast<int>(i + 1), pin, s == "low" ? "low" : "medium", "grid median"};
  }
  plan.source = "rule";
  return plan;
}

InnerDecision rule_decide_inner(const InnerContext& ctx) {
  InnerDecision d;
  d.source = "rule";
  auto stop = [&](std::string why) {
    d.stop = true;
    d.reasoning = std::move(why);
    d.confidence = "high";
    d.expected_improvement = "N/A - converged";
    return d;
  };
  if (ctx.history->any_feasible()) return stop("specification met");
  const std::size_t cap = std::min(ctx.budget.remaining(), unevaluated(*ctx.space, *ctx.history));
  if (ctx.budget.remaining() == 0) return stop("budget exhausted");
  if (cap == 0) return stop("search space exhausted");

  const auto& report = *ctx.report;
  const auto relevant = relevant_records(*ctx.space, *ctx.history);
  const std::uint64_t card = ctx.space->cardinality();
  const bool low_gain = report.recent_improvement_pct && *report.recent_improvement_pct < 2.0;

  if (ctx.loop_iterations >= 3 && ctx.loop_methods.size() >= 2 && low_gain)
    return stop("improvement below 2% after " + std::to_string(ctx.loop_iterations) + " iterations and " +
                std::to_string(ctx.loop_methods.size()) + " methods");

  d.convergence_assessment = std::string(to_string(report.status));
  if (relevant.size() < 10) {
    d.method = method("lhs", sample_size(0.25, 15, card, cap), nlohmann::json::object(), ctx.seed);
    d.reasoning = "fewer than 10 valid designs in the space; explore";
    d.confidence = "high";
  } else if (ctx.loop_iterations >= 1 && report.status == ConvergenceStatus::Stagnant) {
    const std::size_t n = sample_size(0.10, 8, card, cap);
    if (ctx.previous_method == "annealing") {
      d.method = method("multistart", n, {{"n_starts", 5}, {"search_radius", 2}}, ctx.seed);
      d.reasoning = "stagnant after annealing; restart locally from several incumbents";
    } else {
      d.method = method("annealing", n, {{"initial_temperature", 3.0}, {"cooling_rate", 0.95}}, ctx.seed);
      d.reasoning = "stagnant; try to escape the local optimum";
    }
  } else if (relevant.size() < 25) {
    const double mutation = low_gain ? 0.4 : 0.2;
    d.method = method("genetic", sample_size(0.15, 15, card, cap),
                      {{"mutation_rate", mutation}, {"crossover_rate", 0.8}, {"tournament_size", 3}}, ctx.seed);
    d.reasoning = "10 to 24 valid designs; evolve the population";
  } else if (top_k_std(relevant, 10) < 0.01) {
    d.method = method("bayesian", sample_size(0.10, 5, card, cap),
                      {{"acquisition_function", "UCB"}, {"exploration_weight", 2.5}}, ctx.seed);
    d.reasoning = "top designs have collapsed to one FoM; widen the acquisition";
  } else {
    d.method = method("bayesian", sample_size(0.10, 5, card, cap),
                      {{"acquisition_function", "EI"}, {"exploration_weight", 0.2}}, ctx.seed);
    d.reasoning = "enough data for a surrogate; exploit";
  }
  d.expected_improvement = low_gain ? "small" : "moderate";
  return d;
}

OuterDecision rule_decide_outer(const OuterContext& ctx) {
  OuterDecision d;
  d.source = "rule";
  const auto& space = *ctx.space;
  const auto& report = *ctx.report;
  const auto& grid = space.grid();
  auto done = [&](SpaceAction a, std::string why) {
    d.action = a;
    d.edit.action = a;
    d.edit.rationale = why;
    d.reasoning = std::move(why);
    return d;
  };

  if (ctx.history->any_feasible()) return done(SpaceAction::Converged, "specification met");
  if (ctx.budget.used >= ctx.budget.total) return done(SpaceAction::Converged, "budget exhausted");

  const auto fixed = fixed_by_sensitivity(ctx);
  auto unfix_change = [](const std::string& v, std::size_t window) {
    SpaceChange c;
    c.kind = ChangeKind::Unfix;
    c.variable = v;
    c.count = window;
    return c;
  };

  if (report.status == ConvergenceStatus::Stagnant && !fixed.empty()) {
    const std::size_t window = ctx.previous_was_stagnation ? 7 : 5;
    d.edit.changes.push_back(unfix_change(fixed.front(), window));
    d.stagnation_driven = true;
    return done(SpaceAction::UnfixVariables, "stagnation with fixed variables; unfix " + fixed.front());
  }

  // Boundary clustering: expand, escalating at the grid end.
  {
    std::set<std::pair<std::string, bool>> planned;  // (var, lower)
    bool unfixed = false;
    bool expanded = false;
    std::string why;
    auto at_end = [&](const std::string& v, bool lower) {
      const auto& lv = space.levels(v);
      return lower ? lv.front() == grid.front() : lv.back() == grid.back();
    };
    auto add_expand = [&](const std::string& v, bool lower) {
      if (!planned.insert({v, lower}).second) return;
      SpaceChange c;
      c.kind = lower ? ChangeKind::ExpandLower : ChangeKind::ExpandUpper;
      c.variable = v;
      c.count = 2;
      d.edit.changes.push_back(c);
      expanded = true;
    };
    for (const auto& issue : report.issues) {
      if (issue.kind == IssueKind::Stagnation || !space.is_active(issue.variable)) continue;
      const bool lower = issue.kind == IssueKind::BoundaryLower;
      if (!at_end(issue.variable, lower)) {
        add_expand(issue.variable, lower);
        why += issue.variable + (lower ? " lower" : " upper") + " boundary; ";
      } else if (!fixed.empty() && !unfixed) {
        d.edit.changes.push_back(unfix_change(fixed.front(), 5));
        unfixed = true;
        why += issue.variable + " clusters at the grid end; unfix " + fixed.front() + "; ";
      } else if (!at_end(issue.variable, !lower)) {
        add_expand(issue.variable, !lower);
        why += issue.variable + " clusters at the grid end; expand the opposite side; ";
      }
    }
    if (!d.edit.changes.empty()) {
      why.resize(why.size() - 2);
      return done(expanded ? SpaceAction::ExpandRanges : SpaceAction::UnfixVariables, why);
    }
  }

  if (!fixed.empty()) {
    for (const auto& imp : report.impact) {
      if (!imp.converged || !space.is_active(imp.variable) || imp.frequencies.empty()) continue;
      d.edit.changes.push_back(unfix_change(fixed.front(), 5));
      SpaceChange f;
      f.kind = ChangeKind::Fix;
      f.variable = imp.variable;
      f.value = imp.frequencies.front().first;
      d.edit.changes.push_back(f);
      return done(SpaceAction::ChangeFocus,
                  imp.variable + " converged to " + format_number(f.value) + "; explore " + fixed.front() + " instead");
    }
  }

  if (report.status == ConvergenceStatus::Improving) return done(SpaceAction::ContinueCurrent, "still improving");

  // Narrow when the top 80% of the top designs sit within 3 contiguous grid values everywhere.
  {
    auto relevant = relevant_records(space, *ctx.history);
    std::stable_sort(relevant.begin(), relevant.end(),
                     [](const EvaluatedDesign* a, const EvaluatedDesign* b) { return a->fom > b->fom; });
    if (relevant.size() > 10) relevant.resize(10);
    const auto m = static_cast<std::size_t>(std::ceil(0.8 * static_cast<double>(relevant.size())));
    bool tight = m >= 3;
    std::vector<SpaceChange> changes;
    for (const auto& v : space.active_names()) {
      if (!tight) break;
      std::size_t lo = grid.size(), hi = 0;
      for (std::size_t i = 0; i < m; ++i) {
        auto g = *space.grid_index(relevant[i]->design.at(v));
        lo = std::min(lo, g);
        hi = std::max(hi, g);
      }
      if (hi - lo + 1 > 3) {
        tight = false;
        break;
      }
      const auto& lv = space.levels(v);
      std::vector<double> keep;
      for (double x : lv)
        if (x >= grid[lo] && x <= grid[hi]) keep.push_back(x);
      if (keep.size() < 2) {
        auto it = std::find(lv.begin(), lv.end(), keep.front());
        keep = (it + 1 != lv.end()) ? std::vector<double>{*it, *(it + 1)} : std::vector<double>{*(it - 1), *it};
      }
      if (keep.size() < lv.size()) {
        SpaceChange c;
        c.kind = ChangeKind::Narrow;
        c.variable = v;
        c.values = keep;
        changes.push_back(c);
      }
    }
    if (tight && !changes.empty()) {
      d.edit.changes = changes;
      return done(SpaceAction::NarrowRanges, "top designs occupy at most 3 contiguous values per variable");
    }
  }

  if (!fixed.empty()) {
    d.edit.changes.push_back(unfix_change(fixed.front(), 5));
    return done(SpaceAction::UnfixVariables, "no clear signal; unfix " + fixed.front());
  }
  static const std::map<std::string, std::string> none;
  for (const auto& v : by_sensitivity(space.active_names(), ctx.understanding ? ctx.understanding->sensitivity : none)) {
    const auto& lv = space.levels(v);
    for (bool lower : {true, false}) {
      if (lower ? lv.front() == grid.front() : lv.back() == grid.back()) continue;
      SpaceChange c;
      c.kind = lower ? ChangeKind::ExpandLower : ChangeKind::ExpandUpper;
      c.variable = v;
      c.count = 2;
      d.edit.changes.push_back(c);
    }
    if (!d.edit.changes.empty()) return done(SpaceAction::ExpandRanges, "no clear signal; widen " + v);
  }
  return done(SpaceAction::Converged, "every variable spans the full grid; exploration exhausted");
}

}  // namespace sizerforge
