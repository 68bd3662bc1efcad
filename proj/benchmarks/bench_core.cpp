#include <benchmark/benchmark.h>

#include <map>
#include <string>
#include <vector>

#include "sizerforge/controller.hpp"
#include "sizerforge/diagnostics.hpp"
#include "sizerforge/fom.hpp"
#include "sizerforge/gaussian_process.hpp"
#include "sizerforge/optimizers.hpp"
#include "sizerforge/rng.hpp"
#include "sizerforge/surrogate_models.hpp"

using namespace sizerforge;

namespace {

BenchmarkConfig med_config() { return parse_config(surrogate_config_yaml("sota_med"), "sota_med"); }

History lhs_history(const BenchmarkConfig& cfg, std::size_t n) {
  const SearchSpace space = SearchSpace::full(cfg);
  History h;
  MethodConfig m;
  m.method = "lhs";
  m.n_samples = n;
  m.seed = 1;
  SurrogateEvaluator ev("sota_med");
  for (auto r : evaluate_batch(cfg, propose(space, m, h).designs, ev)) {
    r.method = "lhs";
    r.iteration = 1;
    h.append(std::move(r));
  }
  h.close_iteration(0, 1, "lhs", n);
  return h;
}

}  // namespace

static void BM_ComputeFom(benchmark::State& state) {
  const auto dirs = split_directions(parse_spec("fom > 0.1 AND dc_gain_db > 55 AND ugbw > 10 AND power_dc < 50"));
  const std::map<std::string, double> m{{"dc_gain_db", 61.2}, {"ugbw", 42.0}, {"power_dc", 31.5}};
  for (auto _ : state) benchmark::DoNotOptimize(compute_fom(dirs, m));
}
BENCHMARK(BM_ComputeFom);

static void BM_SurrogateEval(benchmark::State& state) {
  const Assignment a{{"W_tail_base", 1.26}, {"W_diff_base", 1.68}, {"W_casc_base", 2.1}, {"W_load_base", 0.84}};
  for (auto _ : state) benchmark::DoNotOptimize(surrogate_eval("sota_med", a));
}
BENCHMARK(BM_SurrogateEval);

static void BM_LhsProposal(benchmark::State& state) {
  const auto cfg = med_config();
  const SearchSpace space = SearchSpace::full(cfg);
  const History h;
  MethodConfig m;
  m.method = "lhs";
  m.n_samples = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    m.seed++;
    benchmark::DoNotOptimize(propose(space, m, h));
  }
}
BENCHMARK(BM_LhsProposal)->Arg(20)->Arg(100);

static void BM_GpFit(benchmark::State& state) {
  Rng rng(3);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < state.range(0); ++i) {
    x.push_back({rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()});
    y.push_back(x.back()[0] * x.back()[1] + x.back()[2] - x.back()[3] * x.back()[3]);
  }
  for (auto _ : state) benchmark::DoNotOptimize(GaussianProcess(x, y));
}
BENCHMARK(BM_GpFit)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_BayesianBatch(benchmark::State& state) {
  const auto cfg = med_config();
  const SearchSpace space = SearchSpace::full(cfg);
  const History h = lhs_history(cfg, 60);
  MethodConfig m;
  m.method = "bayesian";
  m.n_samples = 10;
  m.seed = 2;
  for (auto _ : state) benchmark::DoNotOptimize(propose(space, m, h));
}
BENCHMARK(BM_BayesianBatch)->Unit(benchmark::kMillisecond);

static void BM_Diagnostics(benchmark::State& state) {
  const auto cfg = med_config();
  const SearchSpace space = SearchSpace::full(cfg);
  const History h = lhs_history(cfg, 100);
  for (auto _ : state) benchmark::DoNotOptimize(to_text(analyze(h, space)));
}
BENCHMARK(BM_Diagnostics);

static void BM_RuleRun(benchmark::State& state) {
  const auto cfg = med_config();
  std::uint64_t seed = 0;
  for (auto _ : state) {
    SurrogateEvaluator ev("sota_med");
    DecisionAgent agent(cfg);
    RunOptions o;
    o.seed = ++seed;
    benchmark::DoNotOptimize(run(cfg, ev, agent, o));
  }
}
BENCHMARK(BM_RuleRun)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
