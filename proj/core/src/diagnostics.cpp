#include "sizerforge/diagnostics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "sizerforge/error.hpp"
#include "sizerforge/numeric.hpp"
#include "sizerforge/optimizers.hpp"

namespace sizerforge {

namespace {

std::vector<const EvaluatedDesign*> top_designs(const History& history, const SearchSpace& space, std::size_t k) {
  auto recs = relevant_records(space, history);
  std::stable_sort(recs.begin(), recs.end(), [](const auto* a, const auto* b) { return a->fom > b->fom; });
  if (recs.size() > k) recs.resize(k);
  return recs;
}

bool same_best(const Fom& a, const Fom& b) {
  if (a.is_failed() || b.is_failed()) return a.is_failed() && b.is_failed();
  const double scale = std::max(std::abs(a.value()), 1e-300);
  return std::abs(a.value() - b.value()) / scale < 1e-9;
}

std::string fom_text(const Fom& f, int digits) {
  return f.is_failed() ? std::string("failed") : fmt::format("{:.{}f}", f.value(), digits);
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

std::string and_list(const std::vector<std::string>& items) {
  if (items.size() <= 1) return join(items, "");
  std::vector<std::string> head(items.begin(), items.end() - 1);
  return join(head, ", ") + " and " + items.back();
}

}  // namespace

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::Low: return "low";
    case Severity::Medium: return "medium";
    case Severity::High: return "high";
  }
  return "low";
}

std::string_view to_string(IssueKind k) {
  switch (k) {
    case IssueKind::BoundaryLower: return "boundary_lower";
    case IssueKind::BoundaryUpper: return "boundary_upper";
    case IssueKind::Stagnation: return "stagnation";
  }
  return "stagnation";
}

std::string_view to_string(ConvergenceStatus s) {
  switch (s) {
    case ConvergenceStatus::Improving: return "improving";
    case ConvergenceStatus::Converging: return "converging";
    case ConvergenceStatus::Stagnant: return "stagnant";
  }
  return "improving";
}

std::vector<VariableImpact> variable_impact(const History& history, const SearchSpace& space, std::size_t top_k,
                                            double converged_fraction) {
  if (history.empty()) throw Error(ErrorCode::EmptyHistory, "no evaluations recorded");
  const auto top = top_designs(history, space, top_k);
  std::vector<VariableImpact> out;
  if (top.empty()) return out;
  auto names = space.active_names();
  std::sort(names.begin(), names.end());
  for (const auto& var : names) {
    VariableImpact vi;
    vi.variable = var;
    std::map<double, std::size_t> counts;
    vi.min = vi.max = top.front()->design.at(var);
    for (const auto* r : top) {
      const double v = r->design.at(var);
      ++counts[v];
      vi.min = std::min(vi.min, v);
      vi.max = std::max(vi.max, v);
    }
    vi.frequencies.assign(counts.begin(), counts.end());
    std::stable_sort(vi.frequencies.begin(), vi.frequencies.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    vi.converged = static_cast<double>(vi.frequencies.front().second) >
                   converged_fraction * static_cast<double>(top.size());
    out.push_back(std::move(vi));
  }
  return out;
}

DiagnosticsReport analyze(const History& history, const SearchSpace& space, const DiagnosticsParams& params) {
  const auto& summaries = history.summaries();
  if (summaries.empty() || history.empty()) {
    throw Error(ErrorCode::EmptyHistory, "diagnostics need at least one completed iteration");
  }
  DiagnosticsReport r;
  r.iterations = summaries.size();
  r.designs_evaluated = history.size();
  r.valid_designs = history.valid_count();
  r.feasible_found = history.any_feasible();
  for (const auto& rec : history.records()) {
    auto it = std::find_if(r.methods_used.begin(), r.methods_used.end(),
                           [&](const auto& m) { return m.first == rec.method; });
    if (it == r.methods_used.end()) {
      r.methods_used.emplace_back(rec.method, 1);
    } else {
      ++it->second;
    }
  }
  if (r.valid_designs > 0) {
    const auto best = best_so_far(history);
    r.best_fom = best.record->fom;
    r.best_iteration = best.record->iteration;
  }

  for (const auto& s : summaries) r.progression.push_back(s.best_fom_so_far);
  r.unchanged_iterations = 1;
  for (std::size_t i = r.progression.size() - 1; i > 0; --i) {
    if (!same_best(r.progression[i], r.progression[i - 1])) break;
    ++r.unchanged_iterations;
  }
  if (summaries.size() > params.improvement_window) {
    r.recent_improvement_pct = improvement_pct(summaries, params.improvement_window);
  }
  const bool stagnant = r.progression.size() >= params.stagnation_iters &&
                        r.unchanged_iterations >= params.stagnation_iters && !r.best_fom.is_failed();
  const bool slow = r.recent_improvement_pct && *r.recent_improvement_pct < params.improvement_threshold_pct;
  if (stagnant) {
    r.status = ConvergenceStatus::Stagnant;
  } else if (slow) {
    r.status = ConvergenceStatus::Converging;
  } else {
    r.status = ConvergenceStatus::Improving;
  }
  if (r.recent_improvement_pct) {
    r.reason = fmt::format("recent improvements {} {:.0f}% ({:.2f}%)", slow ? "<" : ">=",
                           params.improvement_threshold_pct, *r.recent_improvement_pct);
  } else {
    r.reason = "first iteration, no improvement history yet";
  }

  // Boundary clustering, upper before lower per variable.
  const auto top = top_designs(history, space, params.top_k);
  r.top_k_used = top.size();
  auto names = space.active_names();
  std::sort(names.begin(), names.end());
  if (!top.empty()) {
    const double k = static_cast<double>(top.size());
    for (const auto& var : names) {
      const auto& levels = space.levels(var);
      std::size_t at_lo = 0;
      std::size_t at_hi = 0;
      for (const auto* rec : top) {
        const double v = rec->design.at(var);
        at_lo += v <= levels.front();
        at_hi += v >= levels.back();
      }
      auto raise = [&](IssueKind kind, std::size_t n, double extreme) {
        const double frac = static_cast<double>(n) / k;
        if (frac < params.medium_fraction) return;
        Issue is;
        is.kind = kind;
        is.variable = var;
        is.count = n;
        is.of = top.size();
        is.value = extreme;
        is.severity = frac >= params.high_fraction ? Severity::High : Severity::Medium;
        const bool lower = kind == IssueKind::BoundaryLower;
        is.evidence = fmt::format("{}/{} top designs at {} boundary ({})", n, top.size(), lower ? "lower" : "upper",
                                  format_number(extreme));
        r.issues.push_back(std::move(is));
      };
      raise(IssueKind::BoundaryUpper, at_hi, levels.back());
      raise(IssueKind::BoundaryLower, at_lo, levels.front());
    }
  }
  if (stagnant) {
    Issue is;
    is.kind = IssueKind::Stagnation;
    is.count = r.unchanged_iterations;
    is.value = r.best_fom.value();
    is.severity = Severity::Medium;
    is.evidence = fmt::format("Best FOM unchanged for {} iterations ({})", r.unchanged_iterations,
                              fom_text(r.best_fom, 4));
    r.issues.push_back(std::move(is));
  }

  r.impact = variable_impact(history, space, params.top_k, params.converged_fraction);

  bool any_high = false;
  bool any_medium = false;
  for (const auto& is : r.issues) {
    any_high |= is.severity == Severity::High;
    any_medium |= is.severity == Severity::Medium;
  }
  r.should_regenerate = any_high || stagnant;
  r.priority = r.should_regenerate ? Severity::High : (any_medium ? Severity::Medium : Severity::Low);

  if (slow) {
    r.actions.push_back({"consider_stopping", {},
                         fmt::format("Consider stopping due to recent improvements < {:.0f}% ({:.2f}%)",
                                     params.improvement_threshold_pct, *r.recent_improvement_pct)});
  }
  std::vector<std::string> flagged;
  for (const auto& var : names) {
    bool lo = false;
    bool hi = false;
    for (const auto& is : r.issues) {
      if (is.variable != var) continue;
      lo |= is.kind == IssueKind::BoundaryLower;
      hi |= is.kind == IssueKind::BoundaryUpper;
    }
    if (!lo && !hi) continue;
    flagged.push_back(var);
    if (lo && hi) {
      r.actions.push_back({"expand_both", {var}, "Expand both ranges for " + var + " due to dual boundary saturation"});
    } else if (lo) {
      r.actions.push_back({"expand_lower", {var},
                           "Expand lower range for " + var + " based on boundary clustering and top design analysis"});
    } else {
      r.actions.push_back({"expand_upper", {var},
                           "Expand upper range for " + var + " based on boundary clustering and top design analysis"});
    }
  }
  std::vector<std::string> keep;
  for (const auto& var : names) {
    if (std::find(flagged.begin(), flagged.end(), var) == flagged.end()) keep.push_back(var);
  }
  if (!keep.empty() && !top.empty()) {
    r.actions.push_back({"keep_ranges", keep, "Keep current ranges for " + and_list(keep) + " with adequate distribution"});
  }
  if (stagnant) {
    if (!flagged.empty()) {
      r.actions.push_back({"escape_stagnation", {}, "Expand search space or change strategy to escape stagnation"});
    } else {
      r.actions.push_back({"unfix_or_change_strategy", {}, "Unfix a variable or change strategy to escape stagnation"});
    }
  }
  return r;
}

std::string to_text(const DiagnosticsReport& r) {
  std::string out;
  out += "Optimization Status:\n";
  std::vector<std::string> methods;
  for (const auto& [m, n] : r.methods_used) methods.push_back(fmt::format("{} ({} designs)", m, n));
  out += fmt::format("{} iterations completed with {} designs evaluated ({} valid). Methods used: {}. ", r.iterations,
                     r.designs_evaluated, r.valid_designs, methods.empty() ? "none" : join(methods, ", "));
  if (r.best_fom.is_failed()) {
    out += "No valid design yet.";
  } else {
    out += fmt::format("Best FOM of {} achieved in iteration {}.", fom_text(r.best_fom, 4), r.best_iteration);
  }
  out += r.feasible_found ? " Specification met.\n" : " Specification not met.\n";

  out += "\nConvergence Analysis:\n";
  std::vector<std::string> prog;
  for (const auto& f : r.progression) prog.push_back(fom_text(f, 3));
  out += fmt::format("FOM progression: [{}]. Status: {}. Reason: {}.", join(prog, ", "), to_string(r.status), r.reason);
  if (r.unchanged_iterations > 1) {
    out += fmt::format(" Best FOM unchanged for {} consecutive iterations.", r.unchanged_iterations);
  }
  out += "\n";

  out += fmt::format("\nSearch Space Issues ({} detected):\n", r.issues.size());
  for (const auto& is : r.issues) {
    std::string sev(to_string(is.severity));
    sev[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(sev[0])));
    if (is.kind == IssueKind::Stagnation) {
      out += fmt::format("- Stagnation: {} -> {} severity\n", is.evidence, sev);
    } else {
      out += fmt::format("- {}: {} -> {} severity, expand {} range\n", is.variable, is.evidence, sev,
                         is.kind == IssueKind::BoundaryLower ? "lower" : "upper");
    }
  }
  if (r.issues.empty()) out += "- none\n";

  out += "\nVariable Impact Analysis:\n";
  std::vector<std::string> parts;
  for (const auto& vi : r.impact) {
    std::string s = fmt::format("{} range [{}, {}]", vi.variable, format_number(vi.min), format_number(vi.max));
    if (vi.frequencies.size() == 1) {
      s += fmt::format(" with only {} appearing ({}x)", format_number(vi.frequencies[0].first),
                       vi.frequencies[0].second);
    } else {
      std::vector<std::string> common;
      for (std::size_t i = 0; i < vi.frequencies.size() && i < 3; ++i) {
        common.push_back(fmt::format("{}: {}x", format_number(vi.frequencies[i].first), vi.frequencies[i].second));
      }
      s += " with most common values (" + join(common, ", ") + ")";
    }
    parts.push_back(s + ".");
  }
  out += parts.empty() ? std::string("No active variables with valid designs.") : "Top design clustering: " + join(parts, " ");
  out += "\n";

  out += "\nRecommendations:\n";
  std::string prio(to_string(r.priority));
  for (auto& c : prio) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  out += fmt::format("Priority: {}. Should regenerate: {}.", prio, r.should_regenerate ? "YES" : "NO");
  if (!r.actions.empty()) {
    std::vector<std::string> acts;
    for (std::size_t i = 0; i < r.actions.size(); ++i) acts.push_back(fmt::format("({}) {}", i + 1, r.actions[i].text));
    out += " Actions: " + join(acts, ", ") + ".";
  }
  out += "\n";
  return out;
}

nlohmann::json to_json(const DiagnosticsReport& r) {
  auto fom_json = [](const Fom& f) { return f.is_failed() ? nlohmann::json(nullptr) : nlohmann::json(f.value()); };
  nlohmann::json j;
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& [m, n] : r.methods_used) methods.push_back({{"method", m}, {"designs", n}});
  j["status_summary"] = {{"iterations", r.iterations},
                         {"designs_evaluated", r.designs_evaluated},
                         {"valid_designs", r.valid_designs},
                         {"methods_used", methods},
                         {"best_fom", fom_json(r.best_fom)},
                         {"best_iteration", r.best_iteration},
                         {"feasible_found", r.feasible_found}};
  nlohmann::json prog = nlohmann::json::array();
  for (const auto& f : r.progression) prog.push_back(fom_json(f));
  j["convergence"] = {{"progression", prog},
                      {"status", std::string(to_string(r.status))},
                      {"reason", r.reason},
                      {"recent_improvement_pct", r.recent_improvement_pct ? nlohmann::json(*r.recent_improvement_pct)
                                                                          : nlohmann::json(nullptr)},
                      {"unchanged_iterations", r.unchanged_iterations}};
  nlohmann::json issues = nlohmann::json::array();
  for (const auto& is : r.issues) {
    nlohmann::json ij = {{"kind", std::string(to_string(is.kind))},
                         {"severity", std::string(to_string(is.severity))},
                         {"evidence", is.evidence},
                         {"count", is.count}};
    if (!is.variable.empty()) {
      ij["variable"] = is.variable;
      ij["of"] = is.of;
      ij["boundary_value"] = is.value;
    }
    issues.push_back(std::move(ij));
  }
  j["issues"] = issues;
  nlohmann::json impact = nlohmann::json::object();
  for (const auto& vi : r.impact) {
    nlohmann::json freq = nlohmann::json::array();
    for (const auto& [v, n] : vi.frequencies) freq.push_back({{"value", v}, {"count", n}});
    impact[vi.variable] = {{"min", vi.min}, {"max", vi.max}, {"frequencies", freq}, {"converged", vi.converged}};
  }
  j["impact"] = impact;
  nlohmann::json actions = nlohmann::json::array();
  for (const auto& a : r.actions) actions.push_back({{"kind", a.kind}, {"variables", a.variables}, {"text", a.text}});
  j["recommendations"] = {{"priority", std::string(to_string(r.priority))},
                          {"should_regenerate", r.should_regenerate},
                          {"actions", actions}};
  return j;
}

}  // namespace sizerforge
