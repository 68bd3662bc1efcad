#include "sizerforge/surrogate_models.hpp"

#include <cmath>
#include <sstream>

#include "sizerforge/error.hpp"
#include "sizerforge/fom.hpp"
#include "sizerforge/numeric.hpp"
#include "sizerforge/search_space.hpp"

namespace sizerforge {

namespace {

const std::vector<double> kGrid = {0.84, 1.05, 1.26, 1.47, 1.68, 1.89, 2.10, 2.31, 2.52};
const char* kTelescopicSpec = "fom > 0.100 AND dc_gain_db > 55 AND ugbw > 10 AND power_dc < 50";

MetricMap easy(const Assignment& a) {
  const double x = a.at("a");
  const double y = a.at("b");
  return {{"gain_db", 20.0 * std::log10(x * y * 10.0)}, {"power_uw", 15.0 * (x + y)}};
}

MetricMap telescopic(const Assignment& a, bool cliff) {
  const double tail = 2.0 * a.at("W_tail_base");
  const double diff = 4.0 * a.at("W_diff_base");
  const double casc = 2.0 * a.at("W_casc_base");
  const double load = 2.0 * a.at("W_load_base");
  double ugbw = 6.0 * diff / (0.5 + 0.3 * load);
  if (cliff && a.at("W_tail_base") < 1.26) ugbw *= 0.2;
  return {{"dc_gain_db", 40.0 + 8.0 * std::log(diff * casc) - 2.0 * load},
          {"ugbw", ugbw},
          {"power_dc", 9.0 * tail + 6.0 * load}};
}

const std::vector<std::string> kTelescopicVars = {"W_tail_base", "W_diff_base", "W_casc_base", "W_load_base"};

const std::vector<SurrogateModel>& registry() {
  static const std::vector<SurrogateModel> models = {
      {"sota_easy", {"a", "b"}, kGrid, "gain_db > 25 AND power_uw < 60", easy},
      {"sota_med", kTelescopicVars, kGrid, kTelescopicSpec, [](const Assignment& a) { return telescopic(a, false); }},
      {"sota_hard", kTelescopicVars, kGrid, kTelescopicSpec, [](const Assignment& a) { return telescopic(a, true); }},
  };
  return models;
}

}  // namespace

std::vector<std::string> surrogate_model_ids() {
  std::vector<std::string> ids;
  for (const auto& m : registry()) ids.push_back(m.id);
  return ids;
}

const SurrogateModel& surrogate_model(std::string_view id) {
  for (const auto& m : registry()) {
    if (m.id == id) return m;
  }
  throw Error(ErrorCode::UnknownModel, "no surrogate model '" + std::string(id) + "'");
}

MetricMap surrogate_eval(std::string_view id, const Assignment& assignment, double noise) {
  const auto& model = surrogate_model(id);
  for (const auto& v : model.variables) {
    if (!assignment.count(v)) throw Error(ErrorCode::MissingAssignment, std::string(id) + " needs " + v);
  }
  MetricMap out = model.formula(assignment);
  if (noise > 0.0) {
    const std::string key = std::string(id) + "|" + Design(assignment).id();
    for (auto& [name, value] : out) {
      const double u = static_cast<double>(mix64(fnv1a(key + "|" + name)) >> 11) * 0x1.0p-53;
      value *= 1.0 + noise * (2.0 * u - 1.0);
    }
  }
  return out;
}

OracleResult enumerate_oracle(const SurrogateModel& model, const std::optional<SpecExpr>& spec_override) {
  const SearchSpace space = SearchSpace::full(model.variables, model.grid);
  if (space.cardinality() > 1000000) {
    throw Error(ErrorCode::GridTooLarge, model.id + " has " + std::to_string(space.cardinality()) + " points");
  }
  const SpecExpr spec = spec_override ? *spec_override : parse_spec(model.spec);
  OracleResult out;
  for (const auto& d : space.enumerate(space.cardinality())) {
    const MetricMap metrics = model.formula(d.assignment());
    const Assessment a = assess(spec, metrics);
    ++out.total;
    out.feasible_count += a.feasible;
    if (out.total == 1 || a.fom > out.fom) {
      out.best = d;
      out.fom = a.fom;
      out.best_feasible = a.feasible;
      out.best_metrics = metrics;
    }
  }
  return out;
}

std::string surrogate_config_yaml(std::string_view id) {
  const auto& m = surrogate_model(id);
  const bool tele = m.id != "sota_easy";
  std::ostringstream y;
  y << "results_dir: \"./" << m.id << "_results\"\n";
  y << "evaluator: surrogate\n";
  y << "surrogate_model: " << m.id << "\n";
  y << "user_specs: \"Analytic surrogate benchmark " << m.id << ".\"\n";
  y << "user_specs_metric: \"" << m.spec << "\"\n";
  y << "variable:\n";
  for (const auto& v : m.variables) y << "  " << v << ": null\n";
  y << "W_values: [";
  for (std::size_t i = 0; i < m.grid.size(); ++i) y << (i ? ", " : "") << format_number(m.grid[i]);
  y << "]\n";
  if (tele) {
    y << "width_scales:\n"
         "  W_tail: [W_tail_base, 2]\n"
         "  W_diff: [W_diff_base, 4]\n"
         "  W_casc: [W_casc_base, 2]\n"
         "  W_load: [W_load_base, 2]\n";
  }
  y << "subckt_name: " << (tele ? "TELESCOPIC_OTA" : "SURROGATE") << "\n";
  y << "metrics:\n";
  for (const auto& [name, _] : m.formula([&] {
         Assignment a;
         for (const auto& v : m.variables) a[v] = m.grid.front();
         return a;
       }())) {
    y << "  - " << name << "\n";
  }
  if (tele) y << "  - fom\n";
  y << "subckt_template: |\n  * analytic model " << m.id << "\n";
  for (const auto& v : m.variables) y << "  * " << v << " = {" << v << "}\n";
  y << "testbench_template: |\n  {ota_subckt}\n  .end\n";
  return y.str();
}

}  // namespace sizerforge
