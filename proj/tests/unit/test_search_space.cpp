#include <gtest/gtest.h>

#include <functional>

#include "sizerforge/error.hpp"
#include "sizerforge/search_space.hpp"

using namespace sizerforge;

namespace {

const std::vector<std::string> kVars = {"W_tail", "W_diff", "W_casc", "W_load"};
const std::vector<double> kGrid = {0.84, 1.05, 1.26, 1.47, 1.68, 1.89, 2.10, 2.31, 2.52};

SearchSpace reduced_plan() {
  return SearchSpace::from_lists(kVars, kGrid,
                                 {{"W_diff", {0.84, 1.26, 1.68, 2.10, 2.52}},
                                  {"W_tail", {0.84, 1.26, 1.68, 2.10}},
                                  {"W_load", {1.26, 1.68, 2.10, 2.52}}},
                                 {{"W_casc", 1.89}});
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

}  // namespace

TEST(SearchSpace, PlanReduction) {
  const SearchSpace s = reduced_plan();
  EXPECT_EQ(s.cardinality(), 80u);
  EXPECT_EQ(s.full_cardinality(), 6561u);
  const Reduction r = s.reduction();
  EXPECT_EQ(r.full, 6561u);
  EXPECT_EQ(r.current, 80u);
  EXPECT_EQ(r.full, 80u * 82u + 1u);
  EXPECT_DOUBLE_EQ(r.value(), 82.0125);
  EXPECT_EQ(s.active_names(), (std::vector<std::string>{"W_tail", "W_diff", "W_load"}));
  EXPECT_EQ(s.fixed_names(), (std::vector<std::string>{"W_casc"}));
}

TEST(SearchSpace, EnumerateAndIndices) {
  const SearchSpace s = reduced_plan();
  const auto all = s.enumerate(1000);
  ASSERT_EQ(all.size(), 80u);
  for (const auto& d : all) {
    EXPECT_TRUE(sample_validate(s, d));
    EXPECT_EQ(d.at("W_casc"), 1.89);
    const auto idx = s.indices_of(d);
    ASSERT_TRUE(idx);
    EXPECT_EQ(s.design_from_indices(*idx), d);
  }
  EXPECT_FALSE(sample_validate(s, Design({{"W_tail", 0.84}, {"W_diff", 0.84}, {"W_casc", 2.52}, {"W_load", 1.26}})));
  const Design p = s.project(Design({{"W_tail", 2.52}, {"W_diff", 1.05}, {"W_casc", 0.84}, {"W_load", 0.84}}));
  EXPECT_TRUE(sample_validate(s, p));
  EXPECT_EQ(p.at("W_tail"), 2.10);
}

TEST(SearchSpace, ConstructionRejectsOffGrid) {
  EXPECT_EQ(code_of([] { SearchSpace::from_lists(kVars, kGrid, {{"W_tail", {0.9, 1.26}}}, {{"W_diff", 0.84}, {"W_casc", 0.84}, {"W_load", 0.84}}); }),
            ErrorCode::ValueOffGrid);
}

TEST(SearchSpace, ExpandAtGridEndIsIllegal) {
  const SearchSpace s = reduced_plan();
  EXPECT_EQ(code_of([&] { s.expand("W_diff", true, 2); }), ErrorCode::IllegalEdit);
  const SearchSpace up = s.expand("W_tail", false, 2);
  EXPECT_EQ(up.levels("W_tail"), (std::vector<double>{0.84, 1.26, 1.68, 2.10, 2.31, 2.52}));
  EXPECT_EQ(up.generation(), s.generation() + 1);
  EXPECT_EQ(s.levels("W_tail").size(), 4u);  // source untouched
}

TEST(SearchSpace, UnfixWindowShiftsInsideGrid) {
  SearchSpace s = SearchSpace::from_lists(kVars, kGrid, {{"W_tail", {0.84, 1.26}}},
                                          {{"W_diff", 2.52}, {"W_casc", 1.68}, {"W_load", 0.84}});
  EXPECT_EQ(s.unfix("W_casc", 5).levels("W_casc"), (std::vector<double>{1.26, 1.47, 1.68, 1.89, 2.10}));
  EXPECT_EQ(s.unfix("W_diff", 5).levels("W_diff"), (std::vector<double>{1.68, 1.89, 2.10, 2.31, 2.52}));
  EXPECT_EQ(s.unfix("W_load", 7).levels("W_load").front(), 0.84);
  EXPECT_EQ(s.unfix("W_load", 7).levels("W_load").size(), 7u);
  EXPECT_EQ(code_of([&] { s.unfix("W_tail", 5); }), ErrorCode::IllegalEdit);
}

TEST(SearchSpace, NarrowFixAndSetActive) {
  const SearchSpace s = reduced_plan();
  EXPECT_EQ(s.narrow("W_diff", {1.26, 1.68}).levels("W_diff"), (std::vector<double>{1.26, 1.68}));
  EXPECT_EQ(code_of([&] { s.narrow("W_diff", {1.26}); }), ErrorCode::IllegalEdit);
  EXPECT_EQ(code_of([&] { s.narrow("W_diff", {0.84, 1.68}); }), ErrorCode::IllegalEdit);
  const SearchSpace f = s.fix("W_diff", 1.68);
  EXPECT_TRUE(f.is_fixed("W_diff"));
  EXPECT_EQ(f.cardinality(), 16u);
  EXPECT_EQ(s.set_active("W_casc", {0.84, 2.52}).cardinality(), 160u);
}

TEST(SearchSpace, ApplyEdit) {
  const SearchSpace s = reduced_plan();
  SpaceEdit e;
  e.action = SpaceAction::ExpandRanges;
  e.changes.push_back({ChangeKind::ExpandUpper, "W_tail", 2, {}, 0});
  e.changes.push_back({ChangeKind::Unfix, "W_casc", 5, {}, 0});
  const SearchSpace t = apply_edit(s, e);
  EXPECT_EQ(t.levels("W_tail").back(), 2.52);
  EXPECT_TRUE(t.is_active("W_casc"));

  SpaceEdit c;
  c.action = SpaceAction::ContinueCurrent;
  EXPECT_EQ(apply_edit(s, c).cardinality(), 80u);
  c.changes.push_back({ChangeKind::Fix, "W_tail", 0, {}, 0.84});
  EXPECT_EQ(code_of([&] { apply_edit(s, c); }), ErrorCode::IllegalEdit);
}

TEST(SearchSpace, ActionNames) {
  for (auto a : {SpaceAction::ContinueCurrent, SpaceAction::ExpandRanges, SpaceAction::NarrowRanges,
                 SpaceAction::UnfixVariables, SpaceAction::ChangeFocus, SpaceAction::Converged})
    EXPECT_EQ(space_action_from_string(to_string(a)), a);
  EXPECT_EQ(to_string(SpaceAction::UnfixVariables), "unfix_variables");
  EXPECT_FALSE(space_action_from_string("bogus"));
}
