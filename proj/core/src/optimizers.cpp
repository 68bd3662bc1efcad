#include "sizerforge/optimizers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "sizerforge/error.hpp"
#include "sizerforge/numeric.hpp"

namespace sizerforge {

namespace {

constexpr std::uint64_t kFullEnumerationLimit = 20000;
constexpr std::size_t kSampledCandidates = 2000;

using Ids = std::set<std::string>;
using Row = std::vector<std::size_t>;

[[noreturn]] void bad_param(const std::string& method, const std::string& what) {
  throw Error(ErrorCode::InvalidParameter, method + ": " + what);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Collects a batch while enforcing dedupe against history, the caller's
// exclusions and the batch itself.
class Batch {
 public:
  Batch(const History& history, const Ids& exclude, bool resample, Proposal& out)
      : history_(history), exclude_(exclude), resample_(resample), out_(out) {}

  bool usable(const Design& d) const {
    if (ids_.count(d.id()) || exclude_.count(d.id())) return false;
    return resample_ || !history_.contains(d.id());
  }

  bool add(const Design& d, nlohmann::json provenance = nlohmann::json::object()) {
    if (!usable(d)) return false;
    ids_.insert(d.id());
    out_.designs.push_back(d);
    out_.provenance.push_back(std::move(provenance));
    return true;
  }

  std::size_t size() const { return out_.designs.size(); }

 private:
  const History& history_;
  const Ids& exclude_;
  bool resample_;
  Ids ids_;
  Proposal& out_;
};

std::vector<std::size_t> level_counts(const SearchSpace& space) {
  std::vector<std::size_t> m;
  for (const auto& v : space.active_names()) m.push_back(space.levels(v).size());
  return m;
}

Row row_of(const SearchSpace& space, const Design& d) { return *space.indices_of(space.project(d)); }

Design random_design(const SearchSpace& space, Rng& rng) {
  Row r;
  for (auto m : level_counts(space)) r.push_back(rng.index(m));
  return space.design_from_indices(r);
}

// Column-wise stratified indices, then each column shuffled independently.
std::vector<Row> lhs_rows(const std::vector<std::size_t>& m, std::size_t n, Rng& rng) {
  std::vector<Row> rows(n, Row(m.size()));
  for (std::size_t c = 0; c < m.size(); ++c) {
    std::vector<std::size_t> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = i * m[c] / n;
    rng.shuffle(col);
    for (std::size_t i = 0; i < n; ++i) rows[i][c] = col[i];
  }
  return rows;
}

// LHS inside `space`, repairing collisions with column swaps (which keep
// the stratification) and dropping whatever cannot be repaired.
void fill_lhs(const SearchSpace& space, std::size_t n, Rng& rng, Batch& batch, const std::string& tag,
              nlohmann::json& diag) {
  if (n == 0) return;
  const auto m = level_counts(space);
  if (m.empty()) {
    batch.add(space.design_from_indices({}), {{"component", tag}});
    return;
  }
  auto rows = lhs_rows(m, n, rng);
  auto bad_rows = [&] {
    std::vector<std::size_t> bad;
    Ids seen;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Design d = space.design_from_indices(rows[i]);
      if (!batch.usable(d) || !seen.insert(d.id()).second) bad.push_back(i);
    }
    return bad;
  };
  std::size_t swaps = 0;
  for (int pass = 0; pass < 200; ++pass) {
    const auto bad = bad_rows();
    if (bad.empty()) break;
    for (auto r : bad) {
      const std::size_t c = rng.index(m.size());
      std::swap(rows[r][c], rows[rng.index(n)][c]);
      ++swaps;
    }
  }
  std::size_t dropped = 0;
  for (const auto& r : rows) {
    if (!batch.add(space.design_from_indices(r), {{"component", tag}})) ++dropped;
  }
  if (swaps) diag["lhs_repair_swaps"] = swaps;
  if (dropped) diag["lhs_dropped"] = dropped;
}

void fill_random(const SearchSpace& space, std::size_t n, Rng& rng, Batch& batch, const std::string& tag) {
  const std::size_t target = batch.size() + n;
  if (space.cardinality() <= kFullEnumerationLimit) {
    auto all = space.enumerate(kFullEnumerationLimit);
    rng.shuffle(all);
    for (const auto& d : all) {
      if (batch.size() >= target) break;
      batch.add(d, {{"component", tag}});
    }
    return;
  }
  for (std::size_t attempt = 0; batch.size() < target && attempt < 100 * n; ++attempt) {
    batch.add(random_design(space, rng), {{"component", tag}});
  }
}

struct Scored {
  const EvaluatedDesign* record;
  Row row;
};

std::vector<Scored> scored_in_space(const SearchSpace& space, const std::vector<const EvaluatedDesign*>& recs) {
  std::vector<Scored> out;
  for (const auto* r : recs) out.push_back({r, row_of(space, r->design)});
  return out;
}

// Highest FoM first, earliest eval_index on ties.
void sort_best_first(std::vector<const EvaluatedDesign*>& recs) {
  std::stable_sort(recs.begin(), recs.end(), [](const auto* a, const auto* b) { return a->fom > b->fom; });
}

std::size_t reflect(long idx, std::size_t m) {
  if (m <= 1) return 0;
  const long hi = static_cast<long>(m) - 1;
  if (idx < 0) idx = -idx;
  if (idx > hi) idx = 2 * hi - idx;
  return static_cast<std::size_t>(std::clamp(idx, 0L, hi));
}

double num(const nlohmann::json& p, const char* key) { return p.at(key).get<double>(); }

Proposal lhs_impl(const SearchSpace& space, const MethodConfig& cfg, const History& history, const Ids& exclude) {
  Proposal p;
  p.method = "lhs";
  Rng rng(cfg.seed);
  Batch batch(history, exclude, cfg.allow_resample, p);
  fill_lhs(space, cfg.n_samples, rng, batch, "lhs", p.diagnostics);
  return p;
}

Proposal random_impl(const SearchSpace& space, const MethodConfig& cfg, const History& history, const Ids& exclude) {
  Proposal p;
  p.method = cfg.method.empty() ? "random" : cfg.method;
  Rng rng(cfg.seed);
  Batch batch(history, exclude, cfg.allow_resample, p);
  fill_random(space, cfg.n_samples, rng, batch, "random");
  return p;
}

Proposal genetic_impl(const SearchSpace& space, const MethodConfig& cfg, const History& history, const Ids& exclude) {
  Proposal p;
  p.method = cfg.method;
  Rng rng(cfg.seed);
  Batch batch(history, exclude, cfg.allow_resample, p);
  const auto& prm = cfg.parameters;
  const double mutation = num(prm, "mutation_rate");
  const double crossover = num(prm, "crossover_rate");
  const auto tournament = prm.at("tournament_size").get<std::size_t>();
  const auto pop_size = prm.at("population_size").get<std::size_t>();
  const bool elitism = prm.at("elitism").get<bool>();

  auto recs = relevant_records(space, history);
  std::vector<const EvaluatedDesign*> pool;
  if (cfg.method == "ga_baseline") {
    // The previous generation is the most recent iteration this baseline ran.
    int last = -1;
    for (const auto* r : recs) {
      if (r->method == "ga_baseline") last = std::max(last, r->iteration);
    }
    for (const auto* r : recs) {
      if (r->method == "ga_baseline" && r->iteration == last) pool.push_back(r);
    }
  } else {
    pool = recs;
  }
  sort_best_first(pool);
  if (pool.size() > pop_size) pool.resize(pop_size);
  if (elitism && !recs.empty()) {
    auto best = recs;
    sort_best_first(best);
    if (std::find(pool.begin(), pool.end(), best.front()) == pool.end()) pool.insert(pool.begin(), best.front());
    p.diagnostics["elite"] = best.front()->design.id();
  }
  p.diagnostics["population"] = pool.size();

  if (pool.size() < 2) {
    p.diagnostics["fallback"] = "lhs";
    p.diagnostics["fallback_reason"] = "fewer than 2 evaluated designs to breed from";
    fill_lhs(space, cfg.n_samples, rng, batch, "lhs", p.diagnostics);
    return p;
  }

  const auto population = scored_in_space(space, pool);
  const auto m = level_counts(space);
  auto pick = [&]() -> const Scored& {
    const Scored* winner = nullptr;
    for (std::size_t t = 0; t < tournament; ++t) {
      const Scored& c = population[rng.index(population.size())];
      if (!winner || c.record->fom > winner->record->fom) winner = &c;
    }
    return *winner;
  };

  for (std::size_t attempt = 0; batch.size() < cfg.n_samples && attempt < 30 * cfg.n_samples; ++attempt) {
    const Scored& a = pick();
    const Scored& b = pick();
    Row child = a.row;
    const bool crossed = rng.bernoulli(crossover);
    if (crossed) {
      for (std::size_t k = 0; k < child.size(); ++k) child[k] = rng.bernoulli(0.5) ? a.row[k] : b.row[k];
    }
    std::size_t mutated = 0;
    for (std::size_t k = 0; k < child.size(); ++k) {
      if (!rng.bernoulli(mutation)) continue;
      const long step = 1 + static_cast<long>(rng.index(2));
      const long dir = rng.bernoulli(0.5) ? 1 : -1;
      const std::size_t next = reflect(static_cast<long>(child[k]) + dir * step, m[k]);
      mutated += next != child[k];
      child[k] = next;
    }
    batch.add(space.design_from_indices(child),
              {{"parents", {a.record->design.id(), b.record->design.id()}}, {"crossover", crossed}, {"mutated", mutated}});
  }
  if (batch.size() < cfg.n_samples) {
    p.diagnostics["random_fill"] = cfg.n_samples - batch.size();
    fill_random(space, cfg.n_samples - batch.size(), rng, batch, "random_fill");
  }
  return p;
}

Proposal bayesian_impl(const SearchSpace& space, const MethodConfig& cfg, const History& history, const Ids& exclude) {
  Proposal p;
  p.method = cfg.method;
  Rng rng(cfg.seed);
  Batch batch(history, exclude, cfg.allow_resample, p);
  const auto kind = acquisition_from_string(cfg.parameters.at("acquisition_function").get<std::string>());
  const double weight = num(cfg.parameters, "exploration_weight");

  const auto recs = relevant_records(space, history);
  if (recs.size() < 5) {
    throw Error(ErrorCode::InsufficientHistory,
                "bayesian needs >= 5 valid evaluations in the current space, have " + std::to_string(recs.size()));
  }
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (const auto* r : recs) {
    x.push_back(normalized_coords(space, r->design));
    y.push_back(r->fom.value());
  }
  GaussianProcess gp(x, y);
  const double best = *std::max_element(y.begin(), y.end());
  const double liar = *std::min_element(y.begin(), y.end());
  const double xi = (kind == Acquisition::EI || kind == Acquisition::PI) ? weight * sample_stddev(y) : weight;

  std::vector<Design> cands;
  if (space.cardinality() <= kFullEnumerationLimit) {
    cands = space.enumerate(kFullEnumerationLimit);
  } else {
    Ids ids;
    for (std::size_t i = 0; i < kSampledCandidates; ++i) {
      Design d = random_design(space, rng);
      if (ids.insert(d.id()).second) cands.push_back(std::move(d));
    }
  }
  std::erase_if(cands, [&](const Design& d) { return !batch.usable(d); });
  p.diagnostics["candidates"] = cands.size();
  p.diagnostics["lengthscale"] = gp.lengthscale();
  p.diagnostics["noise"] = gp.noise();
  p.diagnostics["train_size"] = recs.size();
  p.diagnostics["acquisition_function"] = std::string(to_string(kind));
  if (cands.empty()) return p;

  std::vector<std::vector<double>> pts;
  for (const auto& d : cands) pts.push_back(normalized_coords(space, d));
  auto post = gp.candidates(pts);
  std::vector<bool> taken(cands.size(), false);
  while (batch.size() < cfg.n_samples) {
    std::size_t arg = cands.size();
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (taken[i]) continue;
      const double a = acquisition_value(kind, post.at(i), best, xi);
      if (arg == cands.size() || a > top) {
        top = a;
        arg = i;
      }
    }
    if (arg == cands.size()) break;
    taken[arg] = true;
    const Prediction pr = post.at(arg);
    batch.add(cands[arg], {{"acquisition", top}, {"mean", pr.mean}, {"stddev", pr.stddev}});
    if (batch.size() < cfg.n_samples) {
      try {
        post.condition(arg, liar);
      } catch (const Error&) {
        break;
      }
    }
  }
  return p;
}

Proposal annealing_impl(const SearchSpace& space, const MethodConfig& cfg, const History& history,
                        const Ids& exclude) {
  Proposal p;
  p.method = cfg.method;
  Rng rng(cfg.seed);
  Batch batch(history, exclude, cfg.allow_resample, p);
  double temperature = num(cfg.parameters, "initial_temperature");
  const double cooling = num(cfg.parameters, "cooling_rate");

  auto recs = relevant_records(space, history);
  std::vector<std::pair<std::vector<double>, double>> known;
  for (const auto* r : recs) known.emplace_back(normalized_coords(space, r->design), r->fom.value());

  // Proxy objective: FoM of the nearest evaluated design (L1 on grid
  // coordinates, earliest on ties). Evaluated designs are their own nearest.
  auto proxy = [&](const Design& d) -> std::optional<double> {
    if (known.empty()) return std::nullopt;
    const auto c = normalized_coords(space, d);
    double best_dist = std::numeric_limits<double>::infinity();
    double value = 0.0;
    for (const auto& [kc, f] : known) {
      double dist = 0.0;
      for (std::size_t k = 0; k < c.size(); ++k) dist += std::abs(c[k] - kc[k]);
      if (dist < best_dist - 1e-12) {
        best_dist = dist;
        value = f;
      }
    }
    return value;
  };

  Design current;
  if (!recs.empty()) {
    sort_best_first(recs);
    current = space.project(recs.front()->design);
  } else {
    current = random_design(space, rng);
    p.diagnostics["start"] = "random";
  }
  batch.add(current, {{"step", 0}});
  auto f_cur = proxy(current);

  std::vector<std::size_t> movable;
  const auto m = level_counts(space);
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (m[k] > 1) movable.push_back(k);
  }
  nlohmann::json chain = nlohmann::json::array();
  std::size_t step = 0;
  Row row = *space.indices_of(current);
  while (!movable.empty() && batch.size() < cfg.n_samples && step < 100 * cfg.n_samples) {
    ++step;
    const std::size_t k = movable[rng.index(movable.size())];
    Row cand = row;
    cand[k] = reflect(static_cast<long>(row[k]) + (rng.bernoulli(0.5) ? 1 : -1), m[k]);
    const Design d = space.design_from_indices(cand);
    const auto f_new = proxy(d);
    double delta = 0.0;
    if (f_cur && f_new) delta = 100.0 * (*f_new - *f_cur) / std::max(std::abs(*f_cur), 1e-12);
    const bool accepted = sa_accept(delta, temperature, rng);
    if (chain.size() < 2000) chain.push_back({{"delta", delta}, {"temperature", temperature}, {"accepted", accepted}});
    if (accepted) {
      row = cand;
      f_cur = f_new;
      batch.add(d, {{"step", step}});
    }
    temperature *= cooling;
  }
  p.diagnostics["steps"] = step;
  p.diagnostics["final_temperature"] = temperature;
  p.diagnostics["chain"] = std::move(chain);
  return p;
}

Proposal multistart_impl(const SearchSpace& space, const MethodConfig& cfg, const History& history,
                         const Ids& exclude) {
  Proposal p;
  p.method = cfg.method;
  Rng rng(cfg.seed);
  Batch batch(history, exclude, cfg.allow_resample, p);
  const auto n_starts = cfg.parameters.at("n_starts").get<std::size_t>();
  const auto radius = cfg.parameters.at("search_radius").get<std::size_t>();

  auto recs = relevant_records(space, history);
  sort_best_first(recs);
  std::vector<Design> starts;
  Ids start_ids;
  for (const auto* r : recs) {
    if (starts.size() >= n_starts) break;
    Design d = space.project(r->design);
    if (start_ids.insert(d.id()).second) starts.push_back(std::move(d));
  }
  if (starts.size() < n_starts) {
    const std::size_t need = n_starts - starts.size();
    p.diagnostics["lhs_fill"] = need;
    Proposal fill;
    Batch fb(history, start_ids, cfg.allow_resample, fill);
    fill_lhs(space, need, rng, fb, "start", p.diagnostics);
    for (auto& d : fill.designs) starts.push_back(std::move(d));
  }
  std::vector<std::vector<Design>> hoods;
  for (const auto& s : starts) hoods.push_back(neighborhood(space, s, radius));
  std::vector<std::size_t> cursor(hoods.size(), 0);
  bool progressed = true;
  while (batch.size() < cfg.n_samples && progressed) {
    progressed = false;
    for (std::size_t s = 0; s < hoods.size() && batch.size() < cfg.n_samples; ++s) {
      while (cursor[s] < hoods[s].size()) {
        const Design& d = hoods[s][cursor[s]++];
        if (batch.add(d, {{"start", s}})) {
          progressed = true;
          break;
        }
      }
    }
  }
  p.diagnostics["starts"] = starts.size();
  return p;
}

Proposal adaptive_impl(const SearchSpace& space, const MethodConfig& cfg, const History& history, const Ids& exclude) {
  Proposal p;
  p.method = cfg.method;
  const auto& prm = cfg.parameters;
  const auto split =
      apportion(cfg.n_samples, {num(prm, "explore_weight"), num(prm, "exploit_weight"), num(prm, "random_weight")});
  p.diagnostics["split"] = split;

  Ids taken = exclude;
  auto absorb = [&](Proposal part, const std::string& component) {
    for (std::size_t i = 0; i < part.designs.size(); ++i) {
      taken.insert(part.designs[i].id());
      auto prov = part.provenance[i];
      prov["component"] = component;
      p.designs.push_back(std::move(part.designs[i]));
      p.provenance.push_back(std::move(prov));
    }
    if (!part.diagnostics.empty()) p.diagnostics[component] = std::move(part.diagnostics);
  };

  MethodConfig sub = cfg;
  sub.parameters = nlohmann::json::object();
  if (split[0]) {
    sub.method = "lhs";
    sub.n_samples = split[0];
    sub.seed = mix64(cfg.seed ^ 0x1);
    absorb(lhs_impl(space, sub, history, taken), "lhs");
  }
  if (split[1]) {
    sub.n_samples = split[1];
    sub.seed = mix64(cfg.seed ^ 0x2);
    if (relevant_records(space, history).size() >= 5) {
      sub.method = "bayesian";
      sub.parameters = {{"acquisition_function", "EI"}, {"exploration_weight", 0.2}};
      absorb(bayesian_impl(space, sub, history, taken), "bayesian");
    } else {
      sub.method = "multistart";
      sub.parameters = {{"n_starts", 5}, {"search_radius", 2}};
      absorb(multistart_impl(space, sub, history, taken), "multistart");
    }
  }
  if (split[2]) {
    sub.method = "random";
    sub.n_samples = split[2];
    sub.seed = mix64(cfg.seed ^ 0x3);
    sub.parameters = nlohmann::json::object();
    absorb(random_impl(space, sub, history, taken), "random");
  }
  return p;
}

Proposal bo_baseline_impl(const SearchSpace& space, const MethodConfig& cfg, const History& history) {
  const auto n_init = cfg.parameters.at("n_initial").get<std::size_t>();
  const std::size_t have = relevant_records(space, history).size();
  if (have < n_init) {
    MethodConfig init = cfg;
    init.n_samples = std::min(cfg.n_samples, n_init - have);
    Proposal p = random_impl(space, init, history, {});
    p.method = cfg.method;
    p.diagnostics["phase"] = "random_init";
    return p;
  }
  Proposal p = bayesian_impl(space, cfg, history, {});
  p.diagnostics["phase"] = "model";
  return p;
}

// Allowed keys, defaults and checks per method.
void set_default(nlohmann::json& p, const char* key, nlohmann::json value) {
  if (!p.contains(key)) p[key] = std::move(value);
}

double require_number(const std::string& method, const nlohmann::json& p, const char* key, double lo, double hi,
                      bool lo_open = false) {
  const auto& v = p.at(key);
  if (!v.is_number()) bad_param(method, std::string(key) + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x) || x > hi || (lo_open ? x <= lo : x < lo)) {
    bad_param(method, std::string(key) + " = " + format_number(x) + " outside " + (lo_open ? "(" : "[") +
                          format_number(lo) + ", " + format_number(hi) + "]");
  }
  return x;
}

void require_count(const std::string& method, nlohmann::json& p, const char* key, double lo, double hi) {
  const double x = require_number(method, p, key, lo, hi);
  if (x != std::floor(x)) bad_param(method, std::string(key) + " must be an integer");
  p[key] = static_cast<std::size_t>(x);
}

const std::set<std::string>& known_parameters() {
  static const std::set<std::string> keys = {
      "seed",           "mutation_rate", "crossover_rate", "tournament_size", "population_size",
      "elitism",        "acquisition_function", "exploration_weight", "initial_temperature",
      "cooling_rate",   "n_starts",      "search_radius",  "explore_weight",  "exploit_weight",
      "random_weight",  "n_initial"};
  return keys;
}

}  // namespace

MethodConfig validate_method_config(MethodConfig cfg) {
  cfg.method = lower(cfg.method);
  if (cfg.parameters.is_null()) cfg.parameters = nlohmann::json::object();
  if (!cfg.parameters.is_object()) bad_param(cfg.method, "parameters must be an object");
  auto& p = cfg.parameters;
  if (cfg.method == "optuna") {
    cfg.method = "bayesian";
    set_default(p, "acquisition_function", "PI");
  }
  const bool known = std::find(kOrchestratedMethods.begin(), kOrchestratedMethods.end(), cfg.method) !=
                         kOrchestratedMethods.end() ||
                     std::find(kBaselineMethods.begin(), kBaselineMethods.end(), cfg.method) !=
                         kBaselineMethods.end() ||
                     cfg.method == "random";
  if (!known) throw Error(ErrorCode::UnknownMethod, "unknown method '" + cfg.method + "'");
  if (cfg.n_samples == 0) bad_param(cfg.method, "n_samples must be >= 1");
  for (const auto& [key, _] : p.items()) {
    if (!known_parameters().count(key)) bad_param(cfg.method, "unknown parameter '" + key + "'");
  }

  nlohmann::json keep = nlohmann::json::object();
  auto take = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
      if (p.contains(k)) keep[k] = p[k];
    }
  };
  const std::string& m = cfg.method;
  if (m == "genetic" || m == "ga_baseline") {
    take({"mutation_rate", "crossover_rate", "tournament_size", "population_size", "elitism"});
    const bool base = m == "ga_baseline";
    set_default(keep, "mutation_rate", base ? 0.1 : 0.2);
    set_default(keep, "crossover_rate", 0.8);
    set_default(keep, "tournament_size", 3);
    set_default(keep, "population_size", 20);
    set_default(keep, "elitism", true);
    require_number(m, keep, "mutation_rate", 0.0, 1.0);
    require_number(m, keep, "crossover_rate", 0.0, 1.0);
    require_count(m, keep, "tournament_size", 1, 100);
    require_count(m, keep, "population_size", 2, 10000);
    if (!keep["elitism"].is_boolean()) bad_param(m, "elitism must be a boolean");
  } else if (m == "bayesian" || m == "bo_baseline") {
    take({"acquisition_function", "exploration_weight", "n_initial"});
    const bool base = m == "bo_baseline";
    set_default(keep, "acquisition_function", base ? "UCB" : "EI");
    if (!keep["acquisition_function"].is_string()) bad_param(m, "acquisition_function must be a string");
    const auto acq = acquisition_from_string(keep["acquisition_function"].get<std::string>());
    keep["acquisition_function"] = std::string(to_string(acq));
    const bool bound = acq == Acquisition::UCB || acq == Acquisition::LCB;
    set_default(keep, "exploration_weight", bound ? 2.0 : 0.2);
    require_number(m, keep, "exploration_weight", 0.0, 10.0);
    if (base) {
      set_default(keep, "n_initial", 10);
      require_count(m, keep, "n_initial", 1, 10000);
    }
  } else if (m == "annealing") {
    take({"initial_temperature", "cooling_rate"});
    set_default(keep, "initial_temperature", 2.0);
    set_default(keep, "cooling_rate", 0.95);
    require_number(m, keep, "initial_temperature", 0.0, 1e6, true);
    require_number(m, keep, "cooling_rate", 0.0, 1.0, true);
  } else if (m == "multistart") {
    take({"n_starts", "search_radius"});
    set_default(keep, "n_starts", 5);
    set_default(keep, "search_radius", 2);
    require_count(m, keep, "n_starts", 1, 1000);
    require_count(m, keep, "search_radius", 0, 100);
  } else if (m == "adaptive") {
    take({"explore_weight", "exploit_weight", "random_weight"});
    set_default(keep, "explore_weight", 0.5);
    set_default(keep, "exploit_weight", 0.5);
    set_default(keep, "random_weight", 0.2);
    const double total = require_number(m, keep, "explore_weight", 0.0, 1e6) +
                         require_number(m, keep, "exploit_weight", 0.0, 1e6) +
                         require_number(m, keep, "random_weight", 0.0, 1e6);
    if (!(total > 0.0)) bad_param(m, "weights must not all be zero");
  }
  cfg.parameters = std::move(keep);
  return cfg;
}

Proposal propose(const SearchSpace& space, const MethodConfig& config, const History& history) {
  const MethodConfig cfg = validate_method_config(config);
  const std::string& m = cfg.method;
  if (m == "lhs") return propose_lhs(space, cfg, history);
  if (m == "random") return propose_random(space, cfg, history);
  if (m == "genetic" || m == "ga_baseline") return propose_genetic(space, cfg, history);
  if (m == "bayesian") return propose_bayesian(space, cfg, history);
  if (m == "bo_baseline") return bo_baseline_impl(space, cfg, history);
  if (m == "annealing") return propose_annealing(space, cfg, history);
  if (m == "multistart") return propose_multistart(space, cfg, history);
  if (m == "adaptive") return propose_adaptive(space, cfg, history);
  throw Error(ErrorCode::InvalidParameter, m + " keeps trust-region state; call propose_turbo");
}

Proposal propose_lhs(const SearchSpace& space, const MethodConfig& config, const History& history) {
  return lhs_impl(space, config, history, {});
}

Proposal propose_random(const SearchSpace& space, const MethodConfig& config, const History& history) {
  return random_impl(space, config, history, {});
}

Proposal propose_genetic(const SearchSpace& space, const MethodConfig& config, const History& history) {
  return genetic_impl(space, validate_method_config(config), history, {});
}

Proposal propose_bayesian(const SearchSpace& space, const MethodConfig& config, const History& history) {
  return bayesian_impl(space, validate_method_config(config), history, {});
}

Proposal propose_annealing(const SearchSpace& space, const MethodConfig& config, const History& history) {
  return annealing_impl(space, validate_method_config(config), history, {});
}

Proposal propose_multistart(const SearchSpace& space, const MethodConfig& config, const History& history) {
  return multistart_impl(space, validate_method_config(config), history, {});
}

Proposal propose_adaptive(const SearchSpace& space, const MethodConfig& config, const History& history) {
  return adaptive_impl(space, validate_method_config(config), history, {});
}

void TurboState::update(bool improved) { fraction = improved ? std::min(1.0, fraction * 2.0) : fraction * 0.5; }

bool TurboState::collapsed(std::size_t max_steps) const {
  return fraction * static_cast<double>(max_steps) < 1.0;
}

std::size_t TurboState::window(std::size_t steps) const {
  const double w = std::ceil(fraction * static_cast<double>(steps) - 1e-9);
  return std::min(steps, static_cast<std::size_t>(std::max(0.0, w)));
}

Proposal propose_turbo(const SearchSpace& space, const MethodConfig& config, const History& history,
                       TurboState& state) {
  Proposal p;
  p.method = "turbo_baseline";
  Rng rng(config.seed);
  const Ids none;
  Batch batch(history, none, config.allow_resample, p);
  const auto names = space.active_names();
  const auto m = level_counts(space);
  const std::size_t max_steps = m.empty() ? 0 : *std::max_element(m.begin(), m.end()) - 1;

  if (max_steps > 0 && state.collapsed(max_steps)) {
    p.diagnostics["restart"] = true;
    p.diagnostics["collapsed_fraction"] = state.fraction;
    state = TurboState{0.8, state.restarts + 1};
    fill_lhs(space, config.n_samples, rng, batch, "restart", p.diagnostics);
    p.diagnostics["fraction"] = state.fraction;
    p.diagnostics["restarts"] = state.restarts;
    return p;
  }
  auto recs = relevant_records(space, history);
  p.diagnostics["fraction"] = state.fraction;
  p.diagnostics["restarts"] = state.restarts;
  if (recs.empty()) {
    fill_lhs(space, config.n_samples, rng, batch, "init", p.diagnostics);
    return p;
  }
  sort_best_first(recs);
  const Row center = row_of(space, recs.front()->design);
  std::map<std::string, std::vector<double>> region;
  nlohmann::json bounds = nlohmann::json::object();
  for (std::size_t k = 0; k < names.size(); ++k) {
    const std::size_t steps = m[k] - 1;
    const std::size_t w = state.window(steps);
    std::size_t lo = center[k] >= w / 2 ? center[k] - w / 2 : 0;
    if (lo + w > steps) lo = steps - w;
    const auto& levels = space.levels(names[k]);
    region[names[k]] = std::vector<double>(levels.begin() + static_cast<std::ptrdiff_t>(lo),
                                           levels.begin() + static_cast<std::ptrdiff_t>(lo + w + 1));
    bounds[names[k]] = {levels[lo], levels[lo + w]};
  }
  p.diagnostics["center"] = recs.front()->design.id();
  p.diagnostics["region"] = bounds;
  const SearchSpace sub = SearchSpace::from_lists(space.variables(), space.grid(), region, space.fixed());
  fill_lhs(sub, config.n_samples, rng, batch, "region", p.diagnostics);
  if (batch.size() < config.n_samples) {
    // The region is exhausted; top up from the whole space.
    fill_random(space, config.n_samples - batch.size(), rng, batch, "outside_region");
  }
  return p;
}

std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += std::max(0.0, w);
  std::vector<std::size_t> out(weights.size(), 0);
  if (!(total > 0.0) || weights.empty()) return out;
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double q = static_cast<double>(n) * std::max(0.0, weights[i]) / total;
    out[i] = static_cast<std::size_t>(std::floor(q));
    assigned += out[i];
    rem.emplace_back(q - std::floor(q), i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++out[rem[k % rem.size()].second];
  return out;
}

bool sa_accept(double delta, double temperature, Rng& rng) {
  if (delta >= 0.0) return true;
  if (!(temperature > 0.0)) return false;
  return rng.uniform() < std::exp(delta / temperature);
}

std::vector<Design> neighborhood(const SearchSpace& space, const Design& center, std::size_t radius) {
  const auto m = level_counts(space);
  const Row c = row_of(space, center);
  const long r = static_cast<long>(radius);
  std::vector<std::pair<long, Row>> pts;
  Row offset_row(m.size());
  std::vector<long> off(m.size(), -r);
  if (m.empty()) return {space.project(center)};
  for (;;) {
    bool inside = true;
    long ring = 0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      const long v = static_cast<long>(c[k]) + off[k];
      if (v < 0 || v >= static_cast<long>(m[k])) inside = false;
      offset_row[k] = static_cast<std::size_t>(std::max(0L, v));
      ring = std::max(ring, std::abs(off[k]));
    }
    if (inside) pts.emplace_back(ring, offset_row);
    std::size_t k = m.size();
    while (k-- > 0) {
      if (++off[k] <= r) break;
      off[k] = -r;
    }
    if (k == static_cast<std::size_t>(-1)) break;
  }
  std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Design> out;
  for (const auto& [_, row] : pts) out.push_back(space.design_from_indices(row));
  return out;
}

std::vector<const EvaluatedDesign*> relevant_records(const SearchSpace& space, const History& history) {
  std::vector<const EvaluatedDesign*> out;
  for (const auto& r : history.records()) {
    if (!r.valid()) continue;
    const auto& a = r.design.assignment();
    if (a.size() != space.variables().size()) continue;
    bool ok = true;
    for (const auto& var : space.variables()) {
      auto it = a.find(var);
      if (it == a.end()) {
        ok = false;
      } else if (space.is_fixed(var)) {
        ok = it->second == space.fixed().at(var);
      } else {
        ok = space.grid_index(it->second).has_value();
      }
      if (!ok) break;
    }
    if (ok) out.push_back(&r);
  }
  return out;
}

std::vector<double> normalized_coords(const SearchSpace& space, const Design& design) {
  std::vector<double> out;
  const double span = space.grid().size() > 1 ? static_cast<double>(space.grid().size() - 1) : 1.0;
  for (const auto& var : space.active_names()) {
    const auto idx = space.grid_index(design.at(var));
    out.push_back(idx ? static_cast<double>(*idx) / span : 0.0);
  }
  return out;
}

}  // namespace sizerforge
