#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "sizerforge/error.hpp"
#include "sizerforge/evaluation.hpp"
#include "support/fixtures.hpp"

using namespace sizerforge;
namespace fs = std::filesystem;

namespace {

const std::string kTelescopic = std::string(SIZERFORGE_FIXTURES_DIR) + "/telescopic_ota.yaml";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sizerforge-test-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Stands in for ngspice: prints metrics in raw simulator units.
std::string fake_spice(const fs::path& dir, const std::string& body) {
  const fs::path exe = dir / "fakespice";
  std::ofstream(exe) << "#!/bin/sh\n" << body;
  fs::permissions(exe, fs::perms::owner_all);
  return exe.string();
}

Design tele_design() {
  return Design({{"W_tail_base", 0.84}, {"W_diff_base", 1.05}, {"W_casc_base", 1.26}, {"W_load_base", 2.52}});
}

}  // namespace

TEST(Scrape, PicksLastOccurrenceCaseInsensitive) {
  const std::string log =
      "Circuit: telescopic\n"
      "DC_GAIN_DB = 40\n"
      "ugbw               =  2.500000e+07\n"
      "dc_gain_db[0] = 61.5\n"
      "power_dc = 3.1e-05 at= 0\n"
      "noise: something = 7\n";
  const auto s = scrape_metrics(log, {"dc_gain_db", "ugbw", "power_dc", "phase_margin"});
  EXPECT_DOUBLE_EQ(s.values.at("dc_gain_db"), 61.5);
  EXPECT_DOUBLE_EQ(s.values.at("ugbw"), 2.5e7);
  EXPECT_DOUBLE_EQ(s.values.at("power_dc"), 3.1e-5);
  EXPECT_EQ(s.missing, (std::vector<std::string>{"phase_margin"}));
}

TEST(Surrogate, EvaluatorProducesFeasibility) {
  const auto cfg = sftest::surrogate_config("sota_easy");
  SurrogateEvaluator ev("sota_easy");
  const auto out = evaluate_batch(cfg, {Design({{"a", 0.84}, {"b", 0.84}}), Design({{"a", 2.52}, {"b", 2.52}})}, ev);
  ASSERT_EQ(out.size(), 2u);
  for (const auto& e : out) {
    EXPECT_EQ(e.sim_status, SimStatus::Ok);
    EXPECT_FALSE(e.fom.is_failed());
    EXPECT_TRUE(e.raw_metrics.count("gain_db"));
  }
  EXPECT_DOUBLE_EQ(out[0].fom.value(), 1.6163020421405017);
  EXPECT_EQ(evaluator_spec_for(cfg).kind, EvaluatorSpec::Kind::Surrogate);
  EXPECT_EQ(evaluator_spec_for(cfg).model_id, "sota_easy");
}

TEST(Evaluation, BatchDedupesAndCaches) {
  const auto cfg = sftest::surrogate_config("sota_easy");
  SurrogateEvaluator ev("sota_easy");
  const fs::path dir = scratch("cache");
  ResultCache cache(dir.string());
  const Design a({{"a", 1.05}, {"b", 1.26}});
  const Design b({{"a", 1.26}, {"b", 1.26}});
  const auto first = evaluate_batch(cfg, {a, b, a}, ev, {2, &cache, {}});
  EXPECT_FALSE(first[0].from_cache);
  EXPECT_FALSE(first[1].from_cache);
  EXPECT_TRUE(first[2].from_cache);
  EXPECT_EQ(first[2].fom, first[0].fom);
  EXPECT_EQ(cache.size(), 2u);

  ResultCache reopened(dir.string());
  const auto again = evaluate_batch(cfg, {b}, ev, {1, &reopened, {}});
  EXPECT_TRUE(again[0].from_cache);
  EXPECT_EQ(again[0].fom, first[1].fom);
  EXPECT_NE(cache_key(cfg, a, ev), cache_key(cfg, b, ev));
  fs::remove_all(dir);
}

TEST(Evaluation, MissingMetricIsAStatus) {
  const auto cfg = sftest::surrogate_config("sota_easy");
  RawResult raw;
  raw.metrics = {{"gain_db", 30}};
  const auto e = finish_evaluation(cfg, Design({{"a", 0.84}, {"b", 0.84}}), raw);
  EXPECT_EQ(e.sim_status, SimStatus::MetricMissing);
  EXPECT_TRUE(e.fom.is_failed());
  EXPECT_NE(e.failure_reason.find("power_uw"), std::string::npos);
  EXPECT_FALSE(e.valid());
}

TEST(Spice, UnavailableExecutable) {
  EvaluatorSpec spec;
  spec.kind = EvaluatorSpec::Kind::Spice;
  spec.executable = "definitely-not-a-simulator-xyz";
  try {
    SpiceEvaluator ev(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EvaluatorUnavailable);
  }
  EXPECT_FALSE(find_executable("definitely-not-a-simulator-xyz"));
  EXPECT_TRUE(find_executable("sh"));
}

TEST(Spice, FakeSimulatorAppliesMetricScales) {
  const auto cfg = load_config(kTelescopic);
  const fs::path dir = scratch("spice");
  EvaluatorSpec spec;
  spec.kind = EvaluatorSpec::Kind::Spice;
  spec.executable = fake_spice(dir, "test -f \"$2\" || exit 9\necho dc_gain_db = 60\necho ugbw = 2.5e7\necho power_dc = 3e-5\n");
  spec.workdir = (dir / "sim").string();
  SpiceEvaluator ev(spec);
  const auto out = evaluate_batch(cfg, {tele_design()}, ev, {1, nullptr, (dir / "logs").string()});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].sim_status, SimStatus::Ok) << out[0].failure_reason;
  EXPECT_DOUBLE_EQ(out[0].raw_metrics.at("ugbw"), 25.0);
  EXPECT_DOUBLE_EQ(out[0].raw_metrics.at("power_dc"), 30.0);
  EXPECT_TRUE(fs::exists(dir / "sim" / tele_design().id() / "deck.sp"));
  EXPECT_TRUE(fs::exists(dir / "logs" / (tele_design().id() + ".log")));
  fs::remove_all(dir);
}

TEST(Spice, FailuresAndTimeouts) {
  const auto cfg = load_config(kTelescopic);
  const fs::path dir = scratch("spicefail");
  EvaluatorSpec spec;
  spec.kind = EvaluatorSpec::Kind::Spice;
  spec.workdir = (dir / "sim").string();

  spec.executable = fake_spice(dir, "echo boom\nexit 1\n");
  SpiceEvaluator failing(spec);
  auto r = failing.run(cfg, tele_design());
  EXPECT_EQ(r.status, SimStatus::SimFailed);
  EXPECT_EQ(r.reason, "exit status 1");

  spec.executable = fake_spice(dir, "sleep 5\n");
  spec.timeout_s = 0.2;
  SpiceEvaluator slow(spec);
  r = slow.run(cfg, tele_design());
  EXPECT_EQ(r.status, SimStatus::SimFailed);
  EXPECT_EQ(r.reason, "timeout");
  fs::remove_all(dir);
}

TEST(Evaluation, SpecForRejectsBadKinds) {
  const auto cfg = load_config(kTelescopic);
  EXPECT_EQ(evaluator_spec_for(cfg).kind, EvaluatorSpec::Kind::Spice);
  try {
    evaluator_spec_for(cfg, "hspice");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigInvalid);
  }
  try {
    evaluator_spec_for(cfg, "surrogate");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigInvalid);
  }
}
