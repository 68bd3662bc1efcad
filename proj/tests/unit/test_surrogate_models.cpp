#include <gtest/gtest.h>

#include "sizerforge/error.hpp"
#include "sizerforge/surrogate_models.hpp"

using namespace sizerforge;

TEST(SurrogateModels, Ids) {
  EXPECT_EQ(surrogate_model_ids(), (std::vector<std::string>{"sota_easy", "sota_med", "sota_hard"}));
  try {
    surrogate_model("sota_nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownModel);
  }
}

TEST(SurrogateModels, OracleGoldens) {
  const auto easy = enumerate_oracle(surrogate_model("sota_easy"));
  EXPECT_EQ(easy.total, 81u);
  EXPECT_EQ(easy.feasible_count, 45u);
  EXPECT_DOUBLE_EQ(easy.fom.value(), 1.6163020421405017);
  EXPECT_FALSE(easy.best_feasible);
  EXPECT_EQ(easy.best, Design({{"a", 0.84}, {"b", 0.84}}));

  const auto med = enumerate_oracle(surrogate_model("sota_med"));
  EXPECT_EQ(med.total, 6561u);
  EXPECT_EQ(med.feasible_count, 2410u);
  EXPECT_TRUE(med.best_feasible);
  EXPECT_DOUBLE_EQ(med.fom.value(), 14.79109194302325);
  EXPECT_EQ(med.best.at("W_tail_base"), 0.84);
  EXPECT_EQ(med.best.at("W_diff_base"), 2.52);
  EXPECT_EQ(med.best.at("W_casc_base"), 2.52);
  EXPECT_EQ(med.best.at("W_load_base"), 0.84);

  const auto hard = enumerate_oracle(surrogate_model("sota_hard"));
  EXPECT_EQ(hard.feasible_count, 1460u);
  EXPECT_DOUBLE_EQ(hard.fom.value(), 11.377763033094807);
}

TEST(SurrogateModels, SpecOverrideCanEmptyTheFeasibleSet) {
  const auto r = enumerate_oracle(surrogate_model("sota_easy"), parse_spec("gain_db > 1000 AND power_uw < 60"));
  EXPECT_EQ(r.feasible_count, 0u);
  EXPECT_FALSE(r.best_feasible);
  EXPECT_FALSE(r.fom.is_failed());
}

TEST(SurrogateModels, DeterministicAndBoundedNoise) {
  const Assignment a{{"a", 1.47}, {"b", 2.1}};
  EXPECT_EQ(surrogate_eval("sota_easy", a), surrogate_eval("sota_easy", a));
  const auto clean = surrogate_eval("sota_easy", a);
  const auto noisy = surrogate_eval("sota_easy", a, 0.05);
  EXPECT_EQ(noisy, surrogate_eval("sota_easy", a, 0.05));
  for (const auto& [k, v] : clean) EXPECT_LE(std::abs(noisy.at(k) - v), 0.05 * std::abs(v) + 1e-12) << k;
}
