#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "sizerforge/design.hpp"
#include "sizerforge/gaussian_process.hpp"
#include "sizerforge/history.hpp"
#include "sizerforge/rng.hpp"
#include "sizerforge/search_space.hpp"

namespace sizerforge {

/// Orchestrated methods an agent may pick.
inline const std::vector<std::string> kOrchestratedMethods = {"lhs",       "genetic",   "bayesian",
                                                              "adaptive",  "annealing", "multistart"};
/// Fixed-preset baselines used by run_baseline.
inline const std::vector<std::string> kBaselineMethods = {"ga_baseline", "bo_baseline", "turbo_baseline"};

struct MethodConfig {
  std::string method;
  std::size_t n_samples = 0;
  /// Method-specific parameters, keyed exactly as in the orchestration
  /// prompt's response schema.
  nlohmann::json parameters = nlohmann::json::object();
  std::uint64_t seed = 0;
  /// Permits proposing designs that history already holds.
  bool allow_resample = false;
};

/// Canonicalises the method name ("optuna" becomes bayesian/PI), fills
/// defaults and range-checks every parameter. Throws Error{UnknownMethod}
/// or Error{InvalidParameter}.
MethodConfig validate_method_config(MethodConfig config);

struct Proposal {
  std::vector<Design> designs;
  std::string method;
  /// One entry per design (parents, acquisition value, start index, ...).
  std::vector<nlohmann::json> provenance;
  /// Method-level notes: fallbacks taken, fitted hyperparameters, chains.
  nlohmann::json diagnostics = nlohmann::json::object();
};

/// Dispatches on config.method. Baseline methods other than turbo_baseline
/// are accepted here too; turbo_baseline needs propose_turbo for its state.
Proposal propose(const SearchSpace& space, const MethodConfig& config, const History& history);

Proposal propose_lhs(const SearchSpace& space, const MethodConfig& config, const History& history);
Proposal propose_random(const SearchSpace& space, const MethodConfig& config, const History& history);
Proposal propose_genetic(const SearchSpace& space, const MethodConfig& config, const History& history);
Proposal propose_bayesian(const SearchSpace& space, const MethodConfig& config, const History& history);
Proposal propose_annealing(const SearchSpace& space, const MethodConfig& config, const History& history);
Proposal propose_multistart(const SearchSpace& space, const MethodConfig& config, const History& history);
Proposal propose_adaptive(const SearchSpace& space, const MethodConfig& config, const History& history);

/// Trust-region state of the TuRBO baseline, carried across batches.
struct TurboState {
  double fraction = 0.8;
  int restarts = 0;
  /// Grows x2 (capped at 1) after an improving batch, else halves.
  void update(bool improved);
  /// True when the region is narrower than one index step of a variable
  /// with `max_steps` steps.
  bool collapsed(std::size_t max_steps) const;
  /// Index window width for a variable with `steps` index steps.
  std::size_t window(std::size_t steps) const;
};

/// Centres the region on the incumbent, samples LHS inside it and resets the
/// state (logged in diagnostics) when it has collapsed.
Proposal propose_turbo(const SearchSpace& space, const MethodConfig& config, const History& history,
                       TurboState& state);

// Building blocks exposed for tests.

/// Largest-remainder apportionment of n over the (non-negative) weights.
std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& weights);

/// Metropolis rule on a percent change: accept when delta >= 0, else with
/// probability exp(delta / temperature).
bool sa_accept(double delta, double temperature, Rng& rng);

/// Every design within L-infinity `radius` (level-index steps) of `center`,
/// ordered by ring then lexicographically; `center` itself comes first.
std::vector<Design> neighborhood(const SearchSpace& space, const Design& center, std::size_t radius);

/// Records usable as training data in `space`: valid, with every fixed
/// variable at its pin and active values on the grid.
std::vector<const EvaluatedDesign*> relevant_records(const SearchSpace& space, const History& history);

/// Full-grid index coordinates of the active variables scaled to [0, 1].
std::vector<double> normalized_coords(const SearchSpace& space, const Design& design);

}  // namespace sizerforge
