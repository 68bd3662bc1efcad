#include "sizerforge/agents.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sizerforge/error.hpp"
#include "sizerforge/numeric.hpp"
#include "sizerforge/spec_expr.hpp"
#include "sizerforge/template.hpp"

using nlohmann::json;

namespace sizerforge {

namespace {

const std::map<std::string, std::string>& assets() {
  static const std::map<std::string, std::string> table = {
#include "prompt_assets.inc"
  };
  return table;
}

std::string join(const std::vector<std::string>& xs, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? sep : "") + xs[i];
  return out;
}

std::string list_values(const std::vector<double>& xs) {
  std::vector<std::string> s;
  for (double x : xs) s.push_back(format_number(x));
  return "[" + join(s, ", ") + "]";
}

std::string text_of(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  return j[key].is_string() ? j[key].get<std::string>() : j[key].dump();
}

double snap(const std::vector<double>& grid, double x) {
  return *std::min_element(grid.begin(), grid.end(), [x](double a, double b) { return std::abs(a - x) < std::abs(b - x); });
}

std::vector<double> snap_all(const std::vector<double>& grid, const std::vector<double>& xs, const std::string& var,
                             std::vector<std::string>& repairs) {
  std::vector<double> out;
  for (double x : xs) {
    double s = snap(grid, x);
    if (std::abs(s - x) > 1e-9) repairs.push_back(var + ": " + format_number(x) + " snapped to " + format_number(s));
    out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  auto before = out.size();
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.size() != before) repairs.push_back(var + ": duplicate values removed");
  return out;
}

SpacePlan plan_from_json(const json& j, const BenchmarkConfig& config, std::size_t min_values) {
  SpacePlan plan;
  plan.target = text_of(j, "optimization_target");
  for (const auto& r : j["variable_ranking"])
    plan.ranking.push_back({r["rank"].get<int>(), r["variable"].get<std::string>(),
                            r["impact_on_target"].get<std::string>(), text_of(r, "reasoning")});
  const auto& cfg = j["optimization_configuration"];
  for (const auto& [name, v] : cfg["variables_to_optimize"].items()) {
    PlanVariable pv;
    pv.rank = v.value("rank", 0);
    std::vector<double> raw;
    for (const auto& x : v["search_space"]) raw.push_back(x.get<double>());
    pv.values = snap_all(config.w_values, raw, name, plan.repairs);
    if (pv.values.size() < min_values || pv.values.size() > 7)
      throw Error(ErrorCode::IllegalPlan, name + " has " + std::to_string(pv.values.size()) + " grid values; need " +
                                              std::to_string(min_values) + " to 7");
    pv.sensitivity = v.value("sensitivity", "medium");
    pv.reasoning = text_of(v, "range_reasoning");
    plan.optimize[name] = pv;
  }
  if (cfg.contains("variables_fixed"))
    for (const auto& [name, v] : cfg["variables_fixed"].items()) {
      PlanFixed pf;
      pf.rank = v.value("rank", 0);
      double raw = v["fixed_value"].get<double>();
      pf.value = snap(config.w_values, raw);
      if (std::abs(pf.value - raw) > 1e-9)
        plan.repairs.push_back(name + ": " + format_number(raw) + " snapped to " + format_number(pf.value));
      pf.risk = v.value("risk_if_suboptimal", "medium");
      pf.reasoning = text_of(v, "fixed_reasoning");
      plan.fixed[name] = pf;
    }
  plan.source = "llm";
  // Semantic checks (names, coverage, overlap).
  plan_to_space(plan, config, 0);
  return plan;
}

std::string variable_lines(const BenchmarkConfig& config) {
  std::string out;
  for (const auto& v : config.variables) {
    out += "- " + v;
    std::vector<std::string> scaled;
    for (const auto& name : config.width_scale_order) {
      const auto& s = config.width_scales.at(name);
      if (s.base == v) scaled.push_back(name + " = " + format_number(s.multiplier) + " x " + v);
    }
    if (!scaled.empty()) out += " (" + join(scaled, ", ") + ")";
    out += "\n";
  }
  return out;
}

std::string param_lines(const BenchmarkConfig& config) {
  std::string out;
  for (const auto& p : config.param_order) out += "- " + p + ": " + format_number(config.params.at(p)) + "\n";
  return out.empty() ? "- (none)\n" : out;
}

std::string scaling_lines(const BenchmarkConfig& config) {
  std::string out;
  for (const auto& name : config.width_scale_order) {
    const auto& s = config.width_scales.at(name);
    out += "- " + name + " = " + format_number(s.multiplier) + " x " + s.base + "\n";
  }
  return out.empty() ? "- (none)\n" : out;
}

std::string range_lines(const BenchmarkConfig& config) {
  std::string out;
  for (const auto& v : config.variables) out += "- " + v + ": " + list_values(config.w_values) + "\n";
  return out;
}

std::string space_lines(const SearchSpace& space, bool active) {
  std::string out;
  for (const auto& v : space.variables()) {
    if (active && space.is_active(v)) out += "- " + v + ": " + list_values(space.levels(v)) + "\n";
    if (!active && space.is_fixed(v)) out += "- " + v + " = " + format_number(space.fixed().at(v)) + "\n";
  }
  return out.empty() ? "- (none)\n" : out;
}

}  // namespace

const std::string& prompt_asset(const std::string& name) {
  auto it = assets().find(name);
  if (it == assets().end()) throw Error(ErrorCode::IoError, "unknown prompt asset " + name);
  return it->second;
}

// ---------------------------------------------------------------- parsing

CircuitUnderstanding parse_understanding(const std::string& raw, const BenchmarkConfig& config) {
  json j = parse_agent_json(raw, AgentSchema::Understanding);
  CircuitUnderstanding u;
  u.topology_overview = j["circuit_topology_overview"];
  u.variable_mapping = j["optimization_variables_mapping"];
  const auto& impact = j["optimization_variables_impact"];
  if (impact.is_object())
    for (const auto& [k, v] : impact.items()) u.metric_impact[k] = v.is_string() ? v.get<std::string>() : v.dump();
  else
    u.metric_impact["all"] = impact.is_string() ? impact.get<std::string>() : impact.dump();
  u.interactions = j["variable_interactions"];
  for (const auto& s : j["key_insights_for_optimization"]) u.key_insights.push_back(s);
  for (const auto& v : config.variables) u.sensitivity[v] = "medium";
  if (j.contains("variable_sensitivity"))
    for (const auto& [k, v] : j["variable_sensitivity"].items())
      if (u.sensitivity.count(k) && v.is_string()) u.sensitivity[k] = v.get<std::string>();
  u.source = "llm";
  return u;
}

SpacePlan parse_plan(const std::string& raw, const BenchmarkConfig& config) {
  return plan_from_json(parse_agent_json(raw, AgentSchema::Plan), config, 3);
}

InnerDecision parse_inner(const std::string& raw) {
  json j = parse_agent_json(raw, AgentSchema::Inner);
  InnerDecision d;
  d.stop = j["action"] == "stop";
  if (!d.stop) {
    MethodConfig m;
    m.method = j["method"];
    m.n_samples = static_cast<std::size_t>(j["n_samples"].get<long long>());
    if (j.contains("parameters")) m.parameters = j["parameters"];
    d.method = validate_method_config(m);
  }
  d.reasoning = text_of(j, "reasoning");
  d.confidence = j.value("confidence", "medium");
  d.expected_improvement = text_of(j, "expected_improvement");
  d.convergence_assessment = text_of(j, "convergence_assessment");
  d.source = "llm";
  return d;
}

OuterDecision parse_outer(const std::string& raw, const BenchmarkConfig& config) {
  json j = parse_agent_json(raw, AgentSchema::Outer);
  OuterDecision d;
  d.action = *space_action_from_string(j["action_taken"].get<std::string>());
  d.edit.action = d.action;
  if (d.action != SpaceAction::ContinueCurrent && d.action != SpaceAction::Converged)
    d.plan = plan_from_json(j, config, 2);
  d.reasoning = text_of(j, "regeneration_reasoning");
  if (d.reasoning.empty()) d.reasoning = text_of(j, "changes_from_previous");
  d.edit.rationale = d.reasoning;
  d.confidence = j.value("confidence", "medium");
  d.source = "llm";
  return d;
}

// ---------------------------------------------------------------- prompts

std::string render_understanding_prompt(const BenchmarkConfig& config) {
  std::string sections;
  json skeleton = json::object();
  std::vector<std::string> names = config.variables;
  for (const auto& m : config.metrics) {
    if (m == "fom") continue;
    sections += render_template(prompt_asset("metric_impact_section"),
                                {{"metric_name", m}, {"metric_key", m}, {"variable_names", join(names, ", ")}}) +
                "\n";
    skeleton[m] = "3-5 sentences on how the optimization variables affect " + m;
  }
  std::string metrics;
  for (const auto& m : config.metrics) metrics += "- " + m + "\n";
  return render_template(prompt_asset("circuit_understanding"),
                         {{"subckt_name", config.subckt_name},
                          {"ota_subckt_template", config.subckt_template},
                          {"params", param_lines(config)},
                          {"variables", variable_lines(config)},
                          {"testbench_template", config.testbench_template},
                          {"metrics_list", metrics},
                          {"metric_impact_sections", sections},
                          {"impact_json_str", skeleton.dump(4)}});
}

std::string render_plan_prompt(const BenchmarkConfig& config, const CircuitUnderstanding& u, std::size_t n_to_optimize) {
  const std::size_t n = n_to_optimize == 0 ? std::min<std::size_t>(4, config.variables.size())
                                           : std::min(n_to_optimize, config.variables.size());
  std::string impact;
  for (const auto& [k, v] : u.metric_impact) impact += "- " + k + ": " + v + "\n";
  std::string insights;
  for (const auto& s : u.key_insights) insights += "- " + s + "\n";
  return render_template(prompt_asset("space_plan"),
                         {{"subckt_name", config.subckt_name},
                          {"target_metric", config.user_specs_metric},
                          {"num_variables_to_optimize", std::to_string(n)},
                          {"total_num_variables", std::to_string(config.variables.size())},
                          {"variable_ranges", range_lines(config)},
                          {"scaling_rules", scaling_lines(config)},
                          {"variable_impact_summary", impact},
                          {"variable_interactions", u.interactions},
                          {"key_insights", insights}});
}

std::string render_inner_prompt(const InnerContext& ctx) {
  std::ostringstream s;
  s << "Specification: " << ctx.config->user_specs_metric << "\n";
  s << "Iterations in this loop: " << ctx.loop_iterations << "\n";
  s << "Budget remaining: " << ctx.budget.remaining() << " designs (" << ctx.budget.used << " of "
    << ctx.budget.total << " used)\n";
  s << "Current search space: " << ctx.space->cardinality() << " combinations\n";
  s << space_lines(*ctx.space, true) << "Fixed:\n" << space_lines(*ctx.space, false);
  std::vector<std::string> methods(ctx.loop_methods.begin(), ctx.loop_methods.end());
  s << "Methods used this loop: " << (methods.empty() ? "none" : join(methods, ", ")) << "\n\n";
  s << to_text(*ctx.report);
  return render_template(prompt_asset("orchestration"), {{"status_report", s.str()}});
}

std::string render_outer_prompt(const OuterContext& ctx) {
  const auto& config = *ctx.config;
  const auto& space = *ctx.space;
  const auto& r = *ctx.report;
  std::string progression;
  for (std::size_t i = 0; i < r.progression.size(); ++i)
    progression += "- Iteration " + std::to_string(i + 1) + ": " +
                   (r.progression[i].is_failed() ? std::string("failed") : format_number(r.progression[i].value())) + "\n";
  std::string impact;
  for (const auto& vi : r.impact) {
    impact += "- " + vi.variable + ": range [" + format_number(vi.min) + ", " + format_number(vi.max) + "]";
    if (vi.converged) impact += " (converged)";
    impact += "\n";
  }
  std::string issues;
  for (const auto& is : r.issues) issues += "- [" + std::string(to_string(is.severity)) + "] " + is.evidence + "\n";
  auto relevant = relevant_records(space, *ctx.history);
  std::stable_sort(relevant.begin(), relevant.end(),
                   [](const EvaluatedDesign* a, const EvaluatedDesign* b) { return a->fom > b->fom; });
  std::string top;
  for (std::size_t i = 0; i < std::min<std::size_t>(5, relevant.size()); ++i) {
    top += std::to_string(i + 1) + ". FoM " + format_number(relevant[i]->fom.value()) + ":";
    for (const auto& [k, v] : relevant[i]->design.assignment()) top += " " + k + "=" + format_number(v);
    top += "\n";
  }
  const auto red = space.reduction();
  return render_template(
      prompt_asset("regeneration"),
      {{"iterations_completed", std::to_string(ctx.iterations_completed)},
       {"total_designs", std::to_string(ctx.history->size())},
       {"netlist", config.subckt_template},
       {"available_variables", variable_lines(config)},
       {"fixed_parameters", param_lines(config)},
       {"value_ranges", range_lines(config)},
       {"original_search_space_size", std::to_string(space.full_cardinality())},
       {"search_space_comparison", "Full: " + std::to_string(red.full) + ", current: " + std::to_string(red.current) +
                                       " (reduction " + format_number(red.value()) + "x)"},
       {"optimized_vars_section", space_lines(space, true)},
       {"fixed_vars_section", space_lines(space, false)},
       {"current_search_space", std::to_string(space.cardinality())},
       {"progression_section", progression.empty() ? "- (none)\n" : progression},
       {"convergence_status", std::string(to_string(r.status))},
       {"convergence_reason", r.reason},
       {"best_fom", r.best_fom.is_failed() ? "failed" : format_number(r.best_fom.value())},
       {"stagnant", r.status == ConvergenceStatus::Stagnant ? "yes" : "no"},
       {"impact_section", impact.empty() ? "- (none)\n" : impact},
       {"issues_section", issues.empty() ? "- (none)\n" : issues},
       {"top_designs_section", top.empty() ? "- (none)\n" : top},
       {"target_metric", config.user_specs_metric}});
}

// ---------------------------------------------------------------- agent

DecisionAgent::DecisionAgent(const BenchmarkConfig& config, std::shared_ptr<LlmClient> client)
    : config_(config), client_(std::move(client)) {}

template <typename T, typename Parse, typename Rule>
T DecisionAgent::ask(const std::string& kind, const std::string& prompt, Parse parse, Rule rule) {
  if (!client_) return rule();
  auto fallback = [&](const std::string& why) {
    events_.push_back({kind, "fallback", why});
    spdlog::warn("{} decision falls back to the rule policy: {}", kind, why);
    T out = rule();
    out.source = "fallback";
    return out;
  };
  auto is_transport = [](ErrorCode c) {
    return c == ErrorCode::LlmTransport || c == ErrorCode::LlmTimeout || c == ErrorCode::LlmConfig;
  };
  std::string raw;
  try {
    raw = client_->complete({kind, prompt, {}});
    return parse(raw);
  } catch (const Error& e) {
    if (is_transport(e.code())) return fallback(e.what());
    events_.push_back({kind, "retry", e.what()});
    const std::string retry_prompt = prompt + "\n\nYour previous response was rejected: " + e.what() +
                                     "\nReturn only the corrected JSON object.";
    try {
      return parse(client_->complete({kind, retry_prompt, {}}));
    } catch (const Error& e2) {
      return fallback(e2.what());
    }
  }
}

CircuitUnderstanding DecisionAgent::understand_circuit() {
  return ask<CircuitUnderstanding>(
      "understand", client_ ? render_understanding_prompt(config_) : std::string(),
      [&](const std::string& raw) { return parse_understanding(raw, config_); },
      [&] { return rule_understand(config_); });
}

SpacePlan DecisionAgent::plan_initial_space(const CircuitUnderstanding& understanding, std::size_t n_to_optimize) {
  auto plan = ask<SpacePlan>(
      "plan", client_ ? render_plan_prompt(config_, understanding, n_to_optimize) : std::string(),
      [&](const std::string& raw) { return parse_plan(raw, config_); },
      [&] { return rule_plan(config_, understanding, n_to_optimize); });
  for (const auto& r : plan.repairs) events_.push_back({"plan", "repair", r});
  return plan;
}

InnerDecision DecisionAgent::decide_inner(const InnerContext& ctx) {
  auto d = ask<InnerDecision>(
      "inner", client_ ? render_inner_prompt(ctx) : std::string(), [&](const std::string& raw) { return parse_inner(raw); },
      [&] { return rule_decide_inner(ctx); });
  if (d.stop) return d;
  d.method.seed = ctx.seed;
  const std::size_t cap = ctx.budget.remaining();
  if (cap == 0) {
    d.stop = true;
    d.reasoning += " (budget exhausted)";
  } else if (d.method.n_samples > cap) {
    events_.push_back({"inner", "repair",
                       "n_samples " + std::to_string(d.method.n_samples) + " capped at " + std::to_string(cap)});
    d.method.n_samples = cap;
  }
  return d;
}

OuterDecision DecisionAgent::decide_outer(const OuterContext& ctx) {
  auto d = ask<OuterDecision>(
      "outer", client_ ? render_outer_prompt(ctx) : std::string(),
      [&](const std::string& raw) { return parse_outer(raw, config_); }, [&] { return rule_decide_outer(ctx); });
  if (d.plan)
    for (const auto& r : d.plan->repairs) events_.push_back({"outer", "repair", r});
  return d;
}

// ---------------------------------------------------------------- json

json to_json(const CircuitUnderstanding& u) {
  return {{"circuit_topology_overview", u.topology_overview},
          {"optimization_variables_mapping", u.variable_mapping},
          {"optimization_variables_impact", u.metric_impact},
          {"variable_interactions", u.interactions},
          {"key_insights_for_optimization", u.key_insights},
          {"variable_sensitivity", u.sensitivity},
          {"source", u.source}};
}

json to_json(const SpacePlan& p) {
  json ranking = json::array();
  for (const auto& r : p.ranking)
    ranking.push_back({{"rank", r.rank}, {"variable", r.variable}, {"impact_on_target", r.impact}, {"reasoning", r.reasoning}});
  json opt = json::object(), fixed = json::object();
  for (const auto& [k, v] : p.optimize)
    opt[k] = {{"rank", v.rank}, {"search_space", v.values}, {"num_choices", v.values.size()}, {"sensitivity", v.sensitivity}};
  for (const auto& [k, v] : p.fixed)
    fixed[k] = {{"rank", v.rank}, {"fixed_value", v.value}, {"risk_if_suboptimal", v.risk}};
  return {{"optimization_target", p.target},
          {"variable_ranking", ranking},
          {"optimization_configuration", {{"variables_to_optimize", opt}, {"variables_fixed", fixed}}},
          {"repairs", p.repairs},
          {"source", p.source}};
}

json to_json(const InnerDecision& d) {
  json j{{"action", d.stop ? "stop" : "search"},
         {"reasoning", d.reasoning},
         {"confidence", d.confidence},
         {"expected_improvement", d.expected_improvement},
         {"convergence_assessment", d.convergence_assessment},
         {"source", d.source}};
  if (!d.stop) {
    j["method"] = d.method.method;
    j["n_samples"] = d.method.n_samples;
    j["parameters"] = d.method.parameters;
    j["seed"] = d.method.seed;
  }
  return j;
}

json to_json(const OuterDecision& d) {
  json changes = json::array();
  for (const auto& c : d.edit.changes) {
    json cj{{"kind", to_string(c.kind)}, {"variable", c.variable}};
    if (c.kind == ChangeKind::ExpandLower || c.kind == ChangeKind::ExpandUpper || c.kind == ChangeKind::Unfix)
      cj["count"] = c.count;
    if (c.kind == ChangeKind::Narrow || c.kind == ChangeKind::SetActive) cj["values"] = c.values;
    if (c.kind == ChangeKind::Fix) cj["value"] = c.value;
    changes.push_back(cj);
  }
  json j{{"action_taken", to_string(d.action)},
         {"changes", changes},
         {"stagnation_driven", d.stagnation_driven},
         {"reasoning", d.reasoning},
         {"confidence", d.confidence},
         {"source", d.source}};
  if (d.plan) j["plan"] = to_json(*d.plan);
  return j;
}

}  // namespace sizerforge
