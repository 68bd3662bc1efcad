#pragma once

// Shared test states: a stagnant four-iteration history and helpers.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sizerforge/bench_config.hpp"
#include "sizerforge/history.hpp"
#include "sizerforge/search_space.hpp"
#include "sizerforge/surrogate_models.hpp"

#ifndef SIZERFORGE_TEST_DATA_DIR
#error "SIZERFORGE_TEST_DATA_DIR must point at tests/"
#endif

namespace sftest {

inline std::string data_path(const std::string& rel) { return std::string(SIZERFORGE_TEST_DATA_DIR) + "/" + rel; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline sizerforge::BenchmarkConfig surrogate_config(const std::string& id) {
  return sizerforge::parse_config(sizerforge::surrogate_config_yaml(id), id);
}

inline sizerforge::BenchmarkConfig stagnant_config() { return sizerforge::load_config(data_path("data/stagnant.yaml")); }

// W_diff {0.84..1.47}, W_load {1.68}, W_casc {1.26..2.52}, W_tail five values: 4 x 1 x 4 x 5 = 80.
inline sizerforge::SearchSpace stagnant_space() {
  const auto config = stagnant_config();
  return sizerforge::SearchSpace::from_lists(config.variables, config.w_values,
                                             {{"W_tail", {0.84, 1.26, 1.68, 2.1, 2.52}},
                                              {"W_diff", {0.84, 1.05, 1.26, 1.47}},
                                              {"W_casc", {1.26, 1.68, 2.1, 2.52}},
                                              {"W_load", {1.68}}},
                                             {}, 1);
}

// Four iterations (lhs 25, bayesian 15, annealing 18, bayesian 15) whose best
// FoM goes 0.095, 0.099, 0.099, 0.099 and whose top ten designs cluster at
// boundaries: W_diff all 0.84, W_load all 1.68, W_casc 1.68x4 2.1x3
// 1.26x2 2.52x1, W_tail 1.26x3 2.1x3 2.52x2 0.84x1 1.68x1.
inline sizerforge::History stagnant_history() {
  using namespace sizerforge;
  struct Top {
    double casc, tail;
  };
  const std::vector<Top> top = {{1.68, 1.26}, {1.68, 2.1},  {1.68, 2.52}, {1.68, 0.84}, {2.1, 1.26},
                                {2.1, 2.1},   {2.1, 2.52},  {1.26, 1.26}, {1.26, 2.1},  {2.52, 1.68}};
  auto make = [](double tail, double diff, double casc, double fom) {
    EvaluatedDesign r;
    r.design = Design({{"W_tail", tail}, {"W_diff", diff}, {"W_casc", casc}, {"W_load", 1.68}});
    r.fom = Fom(fom);
    r.raw_metrics = {{"dc_gain_db", 50.0}, {"ugbw", 8.0}, {"power_dc", 40.0}};
    return r;
  };

  std::vector<EvaluatedDesign> fillers;
  for (double diff : {1.05, 1.26, 1.47, 0.84})
    for (double casc : {1.26, 1.68, 2.1, 2.52})
      for (double tail : {0.84, 1.26, 1.68, 2.1, 2.52}) {
        bool is_top = diff == 0.84 && std::any_of(top.begin(), top.end(), [&](const Top& t) {
                        return t.casc == casc && t.tail == tail;
                      });
        if (!is_top) fillers.push_back(make(tail, diff, casc, 0.0));
      }
  std::size_t next_filler = 0;
  double low = 0.0900;
  auto filler = [&](double fom) {
    auto r = fillers.at(next_filler++);
    r.fom = Fom(fom);
    return r;
  };
  auto lower = [&]() {
    low -= 0.0005;
    return low;
  };

  History h;
  auto add = [&](EvaluatedDesign r, int iteration, const char* method) {
    r.iteration = iteration;
    r.outer_loop = 1;
    r.method = method;
    h.append(std::move(r));
  };

  // iteration 1: lhs, best 0.095
  add(filler(0.095), 1, "lhs");
  for (int i = 1; i < 25; ++i) add(filler(lower()), 1, "lhs");
  h.close_iteration(1, 1, "lhs", 25);

  std::size_t t = 0;
  double top_fom = 0.0985;
  auto next_top = [&]() {
    const auto& tp = top.at(t++);
    auto r = make(tp.tail, 0.84, tp.casc, t == 1 ? 0.099 : top_fom);
    if (t > 1) top_fom -= 0.0004;
    return r;
  };

  // iteration 2: bayesian, reaches 0.099
  for (int i = 0; i < 4; ++i) add(next_top(), 2, "bayesian");
  for (int i = 4; i < 15; ++i) add(filler(lower()), 2, "bayesian");
  h.close_iteration(1, 2, "bayesian", 15);

  // iteration 3: annealing
  for (int i = 0; i < 3; ++i) add(next_top(), 3, "annealing");
  for (int i = 3; i < 18; ++i) add(filler(lower()), 3, "annealing");
  h.close_iteration(1, 3, "annealing", 18);

  // iteration 4: bayesian
  for (int i = 0; i < 3; ++i) add(next_top(), 4, "bayesian");
  for (int i = 3; i < 15; ++i) add(filler(lower()), 4, "bayesian");
  h.close_iteration(1, 4, "bayesian", 15);
  return h;
}

}  // namespace sftest
