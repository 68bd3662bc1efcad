// sizerforge command line: run, bench, report, validate, oracle.

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "sizerforge/agents.hpp"
#include "sizerforge/bench_config.hpp"
#include "sizerforge/controller.hpp"
#include "sizerforge/error.hpp"
#include "sizerforge/evaluation.hpp"
#include "sizerforge/harness.hpp"
#include "sizerforge/numeric.hpp"
#include "sizerforge/surrogate_models.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sizerforge;

namespace {

struct RunArgs {
  std::string config;
  std::string backend = "rule";
  std::size_t budget = 300;
  std::size_t inner_cap = 100;
  std::size_t outer_cap = 3;
  std::uint64_t seed = 0;
  std::string evaluator;
  std::size_t workers = 1;
  bool keep_logs = false;
  std::string out;
  std::string method = "autosizer";
  bool no_cu = false, no_ssd = false, no_oe = false, no_srl = false;
};

json design_json(const EvaluatedDesign& r) {
  return {{"assignment", r.design.assignment()},
          {"fom", r.fom.is_failed() ? json(nullptr) : json(r.fom.value())},
          {"feasible", r.feasible},
          {"raw_metrics", r.raw_metrics},
          {"eval_index", r.eval_index}};
}

int cmd_run(const RunArgs& a) {
  const BenchmarkConfig config = load_config(a.config);
  auto spec = evaluator_spec_for(config, a.evaluator);
  std::string out = a.out;
  if (out.empty()) {
    const std::string base = config.results_dir.empty() ? "results" : config.results_dir;
    out = (fs::path(base) / fmt::format("{}_seed{}", config.name, a.seed)).string();
  }
  if (spec.kind == EvaluatorSpec::Kind::Spice) spec.workdir = (fs::path(out) / "sim").string();
  auto evaluator = make_evaluator(spec);

  RunOptions options;
  options.budget = a.budget;
  options.inner_cap = a.inner_cap;
  options.outer_cap = a.outer_cap;
  options.seed = a.seed;
  options.workers = a.workers;
  options.use_cu = !a.no_cu;
  options.use_ssd = !a.no_ssd;
  options.use_oe = !a.no_oe;
  options.use_srl = !a.no_srl;
  if (a.keep_logs) options.log_dir = (fs::path(out) / "logs").string();
  std::optional<ResultCache> cache;
  if (spec.kind == EvaluatorSpec::Kind::Spice) {
    cache.emplace((fs::path(out) / "cache").string());
    options.cache = &*cache;
  }

  RunResult result;
  if (a.method == "autosizer") {
    auto client = make_llm_client(a.backend, (fs::path(out) / "transcripts").string());
    DecisionAgent agent(config, client);
    result = run(config, *evaluator, agent, options);
  } else {
    result = run_baseline(config, *evaluator, a.method, options);
  }
  write_run_outputs(result, config, out);

  json summary = run_summary_json(result, config);
  summary["results_dir"] = out;
  if (result.best) summary["best"] = design_json(*result.best);
  std::cout << summary.dump(2) << "\n";
  return result.outcome == "ok" ? 0 : 3;
}

int cmd_bench(const std::string& matrix_path, const std::string& out_override) {
  TrialMatrix matrix = load_matrix(matrix_path);
  if (!out_override.empty()) matrix.results_dir = out_override;
  if (matrix.results_dir.empty()) matrix.results_dir = "results/bench";
  const MatrixReport report = run_matrix(matrix);
  emit_reports(report, matrix.results_dir);
  std::cout << render_table(report);
  std::cout << "reports written to " << matrix.results_dir << "\n";
  return 0;
}

int cmd_report(const std::string& dir) {
  const fs::path path = fs::path(dir) / "results.json";
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::IoError, path.string() + " is not JSON");
  const MatrixReport report = report_from_json(j);
  std::cout << render_table(report);
  return 0;
}

int cmd_validate(const std::string& path) {
  const BenchmarkConfig config = load_config(path);
  const auto dirs = split_directions(config.spec);
  std::cout << fmt::format("{}: ok\n", config.name);
  std::cout << fmt::format("  variables  {}\n", fmt::join(config.variables, ", "));
  std::cout << fmt::format("  grid       {} values, {} designs\n", config.w_values.size(),
                           config.full_grid_cardinality());
  auto names = [](const std::vector<MetricTarget>& ts) {
    std::vector<std::string> out;
    for (const auto& t : ts) out.push_back(fmt::format("{} ({})", t.metric, format_number(t.target)));
    return fmt::format("{}", fmt::join(out, ", "));
  };
  std::cout << "  maximize   " << names(dirs.maximize) << "\n";
  std::cout << "  minimize   " << names(dirs.minimize) << "\n";
  std::cout << fmt::format("  metrics    {}\n", fmt::join(config.metrics, ", "));
  const auto spec = evaluator_spec_for(config);
  std::cout << "  evaluator  " << (spec.kind == EvaluatorSpec::Kind::Spice ? "spice" : "surrogate:" + spec.model_id)
            << "\n";
  return 0;
}

int cmd_oracle(const std::string& id) {
  const OracleResult r = enumerate_oracle(surrogate_model(id));
  json j{{"model", id},
         {"best", r.best.assignment()},
         {"fom", r.fom.is_failed() ? json(nullptr) : json(r.fom.value())},
         {"best_feasible", r.best_feasible},
         {"best_metrics", r.best_metrics},
         {"feasible_count", r.feasible_count},
         {"total", r.total}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-loop analog circuit sizing"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  RunArgs ra;
  auto* run_cmd = app.add_subcommand("run", "Size one circuit");
  run_cmd->add_option("config", ra.config, "Benchmark config")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--backend", ra.backend, "rule | llm | replay:DIR");
  run_cmd->add_option("--method", ra.method, "autosizer | ga_baseline | bo_baseline | turbo_baseline | lhs");
  run_cmd->add_option("--budget", ra.budget);
  run_cmd->add_option("--inner-cap", ra.inner_cap);
  run_cmd->add_option("--outer-cap", ra.outer_cap);
  run_cmd->add_option("--seed", ra.seed);
  run_cmd->add_option("--evaluator", ra.evaluator)->check(CLI::IsMember({"spice", "surrogate"}));
  run_cmd->add_option("--workers", ra.workers)->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", ra.out, "Results directory");
  run_cmd->add_flag("--keep-logs", ra.keep_logs);
  run_cmd->add_flag("--no-cu", ra.no_cu);
  run_cmd->add_flag("--no-ssd", ra.no_ssd);
  run_cmd->add_flag("--no-oe", ra.no_oe);
  run_cmd->add_flag("--no-srl", ra.no_srl);

  std::string matrix_path, bench_out;
  auto* bench_cmd = app.add_subcommand("bench", "Run a trial matrix");
  bench_cmd->add_option("matrix", matrix_path)->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--out", bench_out);

  std::string report_dir;
  auto* report_cmd = app.add_subcommand("report", "Print the table of a results directory");
  report_cmd->add_option("results_dir", report_dir)->required()->check(CLI::ExistingDirectory);

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Parse and check a config");
  validate_cmd->add_option("config", validate_path)->required()->check(CLI::ExistingFile);

  std::string model_id;
  auto* oracle_cmd = app.add_subcommand("oracle", "Enumerate a surrogate model");
  oracle_cmd->add_option("model", model_id)->required();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*run_cmd) return cmd_run(ra);
    if (*bench_cmd) return cmd_bench(matrix_path, bench_out);
    if (*report_cmd) return cmd_report(report_dir);
    if (*validate_cmd) return cmd_validate(validate_path);
    if (*oracle_cmd) return cmd_oracle(model_id);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
