#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "sizerforge/error.hpp"
#include "sizerforge/harness.hpp"
#include "support/fixtures.hpp"

using namespace sizerforge;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

TrialResult trial(double fom, std::uint64_t evals, double time, bool pass, bool valid = true) {
  TrialResult t;
  t.circuit = "c";
  t.method = "m";
  t.valid = valid;
  t.best_fom = fom;
  t.evals_to_best = evals;
  t.wall_time = time;
  t.spec_pass = pass;
  return t;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sizerforge-test-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Matrix, ParsesFixture) {
  const TrialMatrix m = load_matrix(std::string(SIZERFORGE_FIXTURES_DIR) + "/matrix_surrogates.yaml");
  ASSERT_EQ(m.methods.size(), 2u);
  EXPECT_EQ(m.methods[0].label(), "autosizer(rule)");
  EXPECT_EQ(m.methods[1].label(), "lhs");
  EXPECT_EQ(m.trial_seeds(), (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(m.budget, 300u);
  EXPECT_EQ(fs::path(m.results_dir).filename(), "matrix_surrogates");
}

TEST(Matrix, MethodForms) {
  const TrialMatrix m = parse_matrix(R"(circuits: [surrogate:sota_easy]
methods:
  - name: autosizer
    backend: rule
    use_srl: false
  - bo_baseline
trials: 2
base_seed: 10
)");
  EXPECT_EQ(m.methods[0].label(), "autosizer(rule)-srl");
  EXPECT_FALSE(m.methods[0].use_srl);
  EXPECT_EQ(m.trial_seeds(), (std::vector<std::uint64_t>{10, 11}));
  MethodSpec replay;
  replay.backend = "replay:/some/dir";
  EXPECT_EQ(replay.label(), "autosizer(replay)");
}

TEST(Matrix, Errors) {
  EXPECT_EQ(code_of([] { parse_matrix("methods: [lhs]\n"); }), ErrorCode::MissingKey);
  EXPECT_EQ(code_of([] { parse_matrix("circuits: [a]\n"); }), ErrorCode::MissingKey);
  EXPECT_EQ(code_of([] { parse_matrix("circuits: [a]\nmethods: [simplex]\n"); }), ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of([] { parse_matrix("circuits: []\nmethods: [lhs]\n"); }), ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of([] { parse_matrix("circuits: [a]\nmethods: [lhs]\ntrials: 3\nseeds: [1]\n"); }),
            ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of([] { parse_matrix("[unbalanced"); }), ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of([] { load_matrix("/nonexistent/matrix.yaml"); }), ErrorCode::IoError);
}

TEST(Cells, MeanStdAndSuccessRate) {
  const CellSummary c = summarize_cell({trial(1.0, 10, 1.0, true), trial(3.0, 30, 3.0, false),
                                        trial(0.0, 0, 0.0, false, false)});
  EXPECT_EQ(c.trials, 3u);
  EXPECT_EQ(c.valid_trials, 2u);
  EXPECT_DOUBLE_EQ(c.fom_mean, 2.0);
  EXPECT_DOUBLE_EQ(c.fom_std, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(c.evals_mean, 20.0);
  EXPECT_DOUBLE_EQ(c.time_mean_s, 2.0);
  EXPECT_NEAR(c.sr_pct, 100.0 / 3.0, 1e-12);
}

TEST(Cells, SpecSatisfiedUsesEngineFom) {
  const auto cfg = sftest::stagnant_config();
  EXPECT_FALSE(spec_satisfied(cfg, {{"dc_gain_db", 60}}));
  const auto easy = sftest::surrogate_config("sota_easy");
  EXPECT_TRUE(spec_satisfied(easy, {{"gain_db", 30}, {"power_uw", 50}}));
  EXPECT_FALSE(spec_satisfied(easy, {{"gain_db", 30}, {"power_uw", 70}}));
}

TEST(Matrix, RunIsReproducibleAndReported) {
  const fs::path dir = scratch("matrix");
  TrialMatrix m = parse_matrix(R"(circuits: [surrogate:sota_easy]
methods: [autosizer(rule), lhs]
trials: 3
seeds: [1, 2, 3]
budget: 40
)");
  m.results_dir = (dir / "a").string();
  const MatrixReport a = run_matrix(m);
  m.results_dir = (dir / "b").string();
  const MatrixReport b = run_matrix(m);
  ASSERT_EQ(a.trials.size(), 6u);
  ASSERT_EQ(a.cells.size(), 2u);
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    EXPECT_TRUE(a.trials[i].valid) << a.trials[i].error;
    EXPECT_EQ(a.trials[i].best_fom, b.trials[i].best_fom);
    EXPECT_EQ(a.trials[i].evals_to_best, b.trials[i].evals_to_best);
    EXPECT_EQ(a.trials[i].trajectory, b.trials[i].trajectory);
    EXPECT_LE(a.trials[i].evals_used, 40u);
  }
  EXPECT_TRUE(fs::exists(dir / "a" / "runs" / "sota_easy" / "autosizer_rule_" / "seed_1" / "run.json"));

  emit_reports(a, (dir / "report").string());
  for (const char* f : {"results.json", "table.txt", "trajectories.csv", "space_ranges.csv"})
    EXPECT_TRUE(fs::exists(dir / "report" / f)) << f;
  const std::string table = render_table(a);
  EXPECT_NE(table.find("autosizer(rule)"), std::string::npos);
  EXPECT_NE(table.find("SR%"), std::string::npos);

  const MatrixReport back = report_from_json(report_to_json(a));
  EXPECT_EQ(render_table(back), table);
  fs::remove_all(dir);
}

TEST(Matrix, BrokenCircuitIsRecordedNotThrown) {
  TrialMatrix m = parse_matrix("circuits: [surrogate:sota_none]\nmethods: [lhs]\ntrials: 1\nbudget: 5\n");
  const MatrixReport r = run_matrix(m);
  ASSERT_EQ(r.trials.size(), 1u);
  EXPECT_FALSE(r.trials[0].valid);
  EXPECT_FALSE(r.trials[0].error.empty());
  EXPECT_DOUBLE_EQ(r.cells[0].sr_pct, 0.0);
}
