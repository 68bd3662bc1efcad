#include "sizerforge/controller.hpp"

#include <spdlog/spdlog.h>

#include <cassert>
#include <chrono>
#include <filesystem>
#include <fstream>

#include "sizerforge/error.hpp"
#include "sizerforge/numeric.hpp"
#include "sizerforge/optimizers.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sizerforge {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

json fom_json(const Fom& f) { return f.is_failed() ? json(nullptr) : json(f.value()); }

struct Tracker {
  const BenchmarkConfig& config;
  Evaluator& evaluator;
  const RunOptions& options;
  RunResult& result;
  Clock::time_point start = Clock::now();

  bool out_of_time() const {
    return options.wall_clock_limit_s > 0.0 && seconds_since(start) >= options.wall_clock_limit_s;
  }

  // Evaluates up to `room` designs and appends them; returns the count charged.
  std::size_t evaluate(std::vector<Design> designs, std::size_t room, int loop, int iteration,
                       const std::string& method) {
    if (designs.size() > room) designs.resize(room);
    BatchOptions batch;
    batch.workers = options.workers;
    batch.cache = options.cache;
    batch.log_dir = options.log_dir;
    auto evaluated = evaluate_batch(config, designs, evaluator, batch);
    std::size_t charged = 0;
    for (auto& e : evaluated) {
      e.outer_loop = loop;
      e.iteration = iteration;
      e.method = method;
      if (!e.from_cache) result.sim_time += e.wall_time;
      if (result.history.append(std::move(e))) ++charged;
    }
    result.evals_used += charged;
    if (result.evals_used > options.budget) throw std::logic_error("evaluation budget exceeded");
    return charged;
  }

  void finish() {
    result.wall_time = seconds_since(start);
    result.feasible_found = result.history.any_feasible();
    if (result.history.valid_count() == 0) {
      result.outcome = "NoValidDesign";
      return;
    }
    auto reported = best_for_report(result.history.records());
    result.best = *reported.record;
    result.evals_to_best = reported.evals_to_best;
    result.max_fom = *best_so_far(result.history).record;
  }
};

DiagnosticsReport diagnose(const History& history, const SearchSpace& space, const DiagnosticsParams& params) {
  if (history.summaries().empty()) return {};
  return analyze(history, space, params);
}

Proposal propose_with_fallback(const SearchSpace& space, const MethodConfig& method, const History& history,
                               json& note) {
  try {
    return propose(space, method, history);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InsufficientHistory) throw;
    note = {{"fallback", "lhs"}, {"reason", e.what()}};
    MethodConfig lhs = method;
    lhs.method = "lhs";
    lhs.parameters = json::object();
    auto p = propose(space, validate_method_config(lhs), history);
    return p;
  }
}

}  // namespace

RunResult run(const BenchmarkConfig& config, Evaluator& evaluator, DecisionAgent& agent, const RunOptions& options) {
  RunResult result;
  Tracker t{config, evaluator, options, result};
  auto log = [&](json entry) {
    entry["seq"] = result.decisions.size();
    result.decisions.push_back(std::move(entry));
  };

  if (options.budget == 0 || options.outer_cap == 0 || options.inner_cap == 0) {
    result.stop_reason = "no budget";
    t.finish();
    return result;
  }

  CircuitUnderstanding understanding = options.use_cu ? agent.understand_circuit() : rule_understand(config);
  log({{"kind", "understand"}, {"decision", to_json(understanding)}});

  SearchSpace space = SearchSpace::full(config);
  if (options.use_ssd) {
    SpacePlan plan = agent.plan_initial_space(understanding);
    for (const auto& r : plan.ranking)
      if (understanding.sensitivity.count(r.variable)) understanding.sensitivity[r.variable] = r.impact;
    space = plan_to_space(plan, config, 0);
    log({{"kind", "plan"}, {"decision", to_json(plan)}, {"cardinality", space.cardinality()}});
  }
  result.space_generations.push_back(space);

  int global_iter = 0;
  bool previous_stagnation = false;
  for (std::size_t loop = 0; loop < options.outer_cap; ++loop) {
    result.outer_loops_used = static_cast<int>(loop) + 1;
    BudgetState budget{options.budget, result.evals_used, options.inner_cap, 0};
    int loop_iters = 0;
    std::set<std::string> loop_methods;
    std::string previous_method;

    while (true) {
      budget.used = result.evals_used;
      if (budget.remaining() == 0 || t.out_of_time()) break;
      const std::uint64_t seed = derive_seed(options.seed, loop, static_cast<std::uint64_t>(global_iter));
      DiagnosticsReport report = diagnose(result.history, space, options.diagnostics);
      InnerContext ctx{&config, &result.history, &space, &report, budget, loop_iters, loop_methods, previous_method,
                       seed};

      InnerDecision decision;
      if (options.use_oe) {
        decision = agent.decide_inner(ctx);
      } else {
        MethodConfig m;
        m.method = "lhs";
        m.n_samples = sample_size(0.25, 15, space.cardinality(), budget.remaining());
        m.seed = seed;
        decision.method = validate_method_config(m);
        decision.reasoning = "fixed sampler (orchestration disabled)";
        decision.source = "fixed";
      }
      json entry{{"kind", "inner"}, {"loop", loop}, {"iteration", global_iter + 1},
                 {"space_generation", space.generation()}, {"decision", to_json(decision)}};
      if (decision.stop) {
        entry["evals_used"] = result.evals_used;
        log(entry);
        break;
      }

      json note = json::object();
      Proposal proposal = propose_with_fallback(space, decision.method, result.history, note);
      const std::size_t charged =
          t.evaluate(proposal.designs, budget.remaining(), static_cast<int>(loop), global_iter + 1, decision.method.method);
      ++global_iter;
      result.history.close_iteration(static_cast<int>(loop), global_iter, decision.method.method, charged);
      ++loop_iters;
      loop_methods.insert(decision.method.method);
      previous_method = decision.method.method;

      entry["proposed"] = proposal.designs.size();
      entry["evaluated"] = charged;
      entry["evals_used"] = result.evals_used;
      entry["best_fom"] = fom_json(result.history.summaries().back().best_fom_so_far);
      if (!note.empty()) entry["proposal_note"] = note;
      if (proposal.diagnostics.contains("fallback")) entry["proposal_note"] = proposal.diagnostics;
      log(entry);

      if (charged == 0) break;  // nothing new to learn in this space
      if (result.history.any_feasible()) break;
    }

    DiagnosticsReport report = diagnose(result.history, space, options.diagnostics);
    if (!result.history.summaries().empty()) result.loop_reports.push_back(to_text(report));

    if (result.history.any_feasible()) {
      result.stop_reason = "feasible design found";
      break;
    }
    if (result.evals_used >= options.budget) {
      result.stop_reason = "budget exhausted";
      break;
    }
    if (t.out_of_time()) {
      result.stop_reason = "wall-clock limit";
      break;
    }
    if (!options.use_srl) {
      result.stop_reason = "single loop (regeneration disabled)";
      break;
    }
    if (loop + 1 == options.outer_cap) {
      result.stop_reason = "outer-loop cap reached";
      break;
    }

    OuterContext octx{&config, &result.history, &space, &report, &understanding,
                      BudgetState{options.budget, result.evals_used, options.inner_cap, 0}, global_iter,
                      previous_stagnation};
    OuterDecision decision = agent.decide_outer(octx);
    SearchSpace next;
    try {
      next = apply_outer(decision, space, config);
    } catch (const Error& e) {
      spdlog::warn("outer decision rejected ({}); using the rule policy", e.what());
      decision = rule_decide_outer(octx);
      decision.source = "fallback";
      next = apply_outer(decision, space, config);
    }
    log({{"kind", "outer"},
         {"loop", loop},
         {"space_generation", space.generation()},
         {"decision", to_json(decision)},
         {"cardinality_after", next.cardinality()}});
    previous_stagnation = decision.stagnation_driven;
    if (decision.action == SpaceAction::Converged) {
      result.stop_reason = "converged: " + decision.reasoning;
      break;
    }
    if (!(next == space)) result.space_generations.push_back(next);
    space = next;
  }

  result.agent_events = agent.events();
  t.finish();
  return result;
}

RunResult run_baseline(const BenchmarkConfig& config, Evaluator& evaluator, const std::string& algorithm,
                       const RunOptions& options) {
  RunResult result;
  Tracker t{config, evaluator, options, result};
  const SearchSpace space = SearchSpace::full(config);
  result.space_generations.push_back(space);
  result.outer_loops_used = 1;

  std::size_t batch = 20;
  if (algorithm == "bo_baseline") batch = 10;
  else if (algorithm == "lhs") batch = options.budget;
  else if (algorithm != "ga_baseline" && algorithm != "turbo_baseline")
    throw Error(ErrorCode::UnknownMethod, "unknown baseline " + algorithm);

  TurboState turbo;
  int iteration = 0;
  while (result.evals_used < options.budget && !t.out_of_time()) {
    const std::size_t room = options.budget - result.evals_used;
    MethodConfig m;
    m.method = algorithm;
    m.n_samples = std::min(batch, room);
    m.seed = derive_seed(options.seed, 0, static_cast<std::uint64_t>(iteration));
    m = validate_method_config(m);

    const Fom before = result.history.valid_count() ? best_so_far(result.history).record->fom : Fom::failed();
    Proposal proposal = algorithm == "turbo_baseline" ? propose_turbo(space, m, result.history, turbo)
                                                      : propose(space, m, result.history);
    const std::size_t charged = t.evaluate(proposal.designs, room, 0, iteration + 1, algorithm);
    ++iteration;
    result.history.close_iteration(0, iteration, algorithm, charged);
    const Fom after = result.history.summaries().back().best_fom_so_far;

    json entry{{"kind", "baseline"},       {"iteration", iteration},       {"method", algorithm},
               {"seed", m.seed},           {"proposed", proposal.designs.size()}, {"evaluated", charged},
               {"evals_used", result.evals_used}, {"best_fom", fom_json(after)}};
    if (algorithm == "turbo_baseline") {
      turbo.update(after > before);
      entry["trust_region"] = {{"fraction", turbo.fraction}, {"restarts", turbo.restarts}};
    }
    if (!proposal.diagnostics.empty()) entry["diagnostics"] = proposal.diagnostics;
    entry["seq"] = result.decisions.size();
    result.decisions.push_back(entry);
    if (charged == 0) break;
  }
  result.stop_reason = result.evals_used >= options.budget ? "budget exhausted" : "no new designs";
  t.finish();
  return result;
}

json space_to_json(const SearchSpace& space) {
  json active = json::object(), fixed = json::object();
  for (const auto& [k, v] : space.active()) active[k] = v;
  for (const auto& [k, v] : space.fixed()) fixed[k] = v;
  return {{"generation", space.generation()},
          {"active", active},
          {"fixed", fixed},
          {"cardinality", space.cardinality()},
          {"full_cardinality", space.full_cardinality()},
          {"reduction_factor", space.reduction().value()}};
}

json spaces_to_json(const std::vector<SearchSpace>& generations) {
  json out = json::array();
  for (std::size_t g = 0; g < generations.size(); ++g) {
    json j = space_to_json(generations[g]);
    json diff = json::array();
    if (g > 0) {
      const auto& prev = generations[g - 1];
      for (const auto& v : generations[g].variables()) {
        json before = prev.is_active(v) ? json(prev.levels(v)) : json(prev.fixed().at(v));
        json after = generations[g].is_active(v) ? json(generations[g].levels(v)) : json(generations[g].fixed().at(v));
        if (before != after) diff.push_back({{"variable", v}, {"before", before}, {"after", after}});
      }
    }
    j["changes"] = diff;
    out.push_back(j);
  }
  return out;
}

json run_summary_json(const RunResult& r, const BenchmarkConfig& config) {
  json j{{"config", config.name},
         {"outcome", r.outcome},
         {"feasible_found", r.feasible_found},
         {"evals_used", r.evals_used},
         {"evals_to_best", r.evals_to_best},
         {"wall_time_s", r.wall_time},
         {"sim_time_s", r.sim_time},
         {"outer_loops_used", r.outer_loops_used},
         {"stop_reason", r.stop_reason},
         {"space_generations", r.space_generations.size()}};
  j["best"] = r.best ? record_to_json(*r.best) : json(nullptr);
  j["max_fom"] = r.max_fom ? fom_json(r.max_fom->fom) : json(nullptr);
  json events = json::array();
  for (const auto& e : r.agent_events) events.push_back({{"kind", e.kind}, {"what", e.what}, {"detail", e.detail}});
  j["agent_events"] = events;
  return j;
}

void write_run_outputs(const RunResult& r, const BenchmarkConfig& config, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "reports", ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir + ": " + ec.message());
  auto write = [&](const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
  };
  write(fs::path(dir) / "run.json", run_summary_json(r, config).dump(2) + "\n");
  write(fs::path(dir) / "decisions.json", r.decisions.dump(2) + "\n");
  write(fs::path(dir) / "spaces.json", spaces_to_json(r.space_generations).dump(2) + "\n");
  std::ofstream hist(fs::path(dir) / "history.jsonl", std::ios::binary);
  if (!hist) throw Error(ErrorCode::IoError, "cannot write history.jsonl");
  write_history_jsonl(r.history, hist);
  for (std::size_t k = 0; k < r.loop_reports.size(); ++k)
    write(fs::path(dir) / "reports" / ("loop_" + std::to_string(k + 1) + ".txt"), r.loop_reports[k]);
}

}  // namespace sizerforge
