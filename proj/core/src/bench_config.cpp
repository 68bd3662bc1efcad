#include "sizerforge/bench_config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "sizerforge/error.hpp"
#include "sizerforge/numeric.hpp"
#include "sizerforge/template.hpp"

namespace sizerforge {

namespace {

const std::set<std::string>& recognized_keys() {
  static const std::set<std::string> keys = {
      "name",        "pdk_lib_path",        "results_dir",      "user_specs",
      "user_specs_metric", "params",        "variable",         "W_values",
      "width_scales", "subckt_name",        "subckt_pins",      "testbench_signals",
      "metrics",     "metric_scales",       "ota_subckt_template", "subckt_template",
      "testbench_template"};
  return keys;
}

// Slots every config may use besides params, variables and derived widths.
const std::set<std::string>& builtin_slots() {
  static const std::set<std::string> slots = {"pdk_lib_path", "subckt_name", "ota_subckt", "inst_pins",
                                              "corner"};
  return slots;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

YAML::Node require(const YAML::Node& root, const char* key) {
  YAML::Node n = root[key];
  if (!n || n.IsNull()) throw Error(ErrorCode::MissingKey, key);
  return n;
}

std::string scalar(const YAML::Node& n, const std::string& what) {
  if (!n.IsScalar()) throw Error(ErrorCode::ConfigInvalid, what + " must be a scalar");
  return n.as<std::string>();
}

double number(const YAML::Node& n, const std::string& what) {
  double v = 0.0;
  if (!n.IsScalar() || !parse_number(n.Scalar(), v)) {
    throw Error(ErrorCode::ConfigInvalid, what + " is not a number");
  }
  return v;
}

void check_templates(const BenchmarkConfig& c) {
  std::set<std::string> resolvable = builtin_slots();
  for (const auto& [k, v] : c.params) resolvable.insert(k);
  for (const auto& v : c.variables) resolvable.insert(v);
  for (const auto& [k, v] : c.width_scales) resolvable.insert(k);
  for (const auto* text : {&c.subckt_template, &c.testbench_template}) {
    for (const auto& slot : template_placeholders(*text)) {
      if (!resolvable.count(slot)) throw Error(ErrorCode::TemplateUnresolvable, "{" + slot + "}");
    }
  }
}

}  // namespace

std::string BenchmarkConfig::passthrough_scalar(std::string_view key, std::string_view fallback) const {
  auto it = passthrough.find(std::string(key));
  if (it == passthrough.end()) return std::string(fallback);
  try {
    YAML::Node n = YAML::Load(it->second);
    if (n.IsScalar()) return n.as<std::string>();
  } catch (const YAML::Exception&) {
  }
  return std::string(fallback);
}

std::size_t BenchmarkConfig::full_grid_cardinality() const {
  std::size_t n = 1;
  for (std::size_t i = 0; i < variables.size(); ++i) n *= w_values.size();
  return n;
}

BenchmarkConfig parse_config(std::string_view source, std::string_view name) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(source));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("malformed document: ") + e.what());
  }
  if (!root.IsMap()) throw Error(ErrorCode::ConfigInvalid, "top level must be a key/value map");

  BenchmarkConfig c;
  c.user_specs_metric = scalar(require(root, "user_specs_metric"), "user_specs_metric");

  const YAML::Node vars = require(root, "variable");
  if (!vars.IsMap()) throw Error(ErrorCode::ConfigInvalid, "variable must be a map of names");
  for (const auto& kv : vars) c.variables.push_back(kv.first.as<std::string>());
  if (c.variables.empty()) throw Error(ErrorCode::ConfigInvalid, "no variables declared");

  const YAML::Node grid = require(root, "W_values");
  if (!grid.IsSequence() || grid.size() == 0) throw Error(ErrorCode::ConfigInvalid, "W_values must be a list");
  for (const auto& v : grid) c.w_values.push_back(number(v, "W_values entry"));
  for (std::size_t i = 0; i < c.w_values.size(); ++i) {
    if (!(c.w_values[i] > 0.0) || (i > 0 && !(c.w_values[i] > c.w_values[i - 1]))) {
      throw Error(ErrorCode::NonMonotonicGrid, "W_values must be positive and strictly increasing");
    }
  }

  const YAML::Node metrics = require(root, "metrics");
  if (!metrics.IsSequence()) throw Error(ErrorCode::ConfigInvalid, "metrics must be a list");
  for (const auto& m : metrics) c.metrics.push_back(trim(scalar(m, "metric")));
  if (c.metrics.empty()) throw Error(ErrorCode::ConfigInvalid, "metrics list is empty");

  c.subckt_name = trim(scalar(require(root, "subckt_name"), "subckt_name"));
  if (root["ota_subckt_template"] && !root["ota_subckt_template"].IsNull()) {
    c.subckt_template = scalar(root["ota_subckt_template"], "ota_subckt_template");
  } else if (root["subckt_template"] && !root["subckt_template"].IsNull()) {
    c.subckt_template = scalar(root["subckt_template"], "subckt_template");
  } else {
    throw Error(ErrorCode::MissingKey, "ota_subckt_template");
  }
  c.testbench_template = scalar(require(root, "testbench_template"), "testbench_template");

  if (root["name"]) c.name = trim(scalar(root["name"], "name"));
  if (c.name.empty()) c.name = name.empty() ? c.subckt_name : std::string(name);
  if (root["pdk_lib_path"]) c.pdk_lib_path = scalar(root["pdk_lib_path"], "pdk_lib_path");
  if (root["results_dir"]) c.results_dir = scalar(root["results_dir"], "results_dir");
  if (root["user_specs"]) c.user_specs = scalar(root["user_specs"], "user_specs");

  if (const YAML::Node params = root["params"]; params && !params.IsNull()) {
    if (!params.IsMap()) throw Error(ErrorCode::ConfigInvalid, "params must be a map");
    for (const auto& kv : params) {
      const auto key = kv.first.as<std::string>();
      c.params[key] = number(kv.second, "param " + key);
      c.param_order.push_back(key);
    }
  }

  if (const YAML::Node scales = root["width_scales"]; scales && !scales.IsNull()) {
    if (!scales.IsMap()) throw Error(ErrorCode::ConfigInvalid, "width_scales must be a map");
    for (const auto& kv : scales) {
      const auto width = kv.first.as<std::string>();
      if (!kv.second.IsSequence() || kv.second.size() != 2) {
        throw Error(ErrorCode::ConfigInvalid, "width_scales." + width + " must be [base, multiplier]");
      }
      WidthScale s{trim(kv.second[0].as<std::string>()), number(kv.second[1], "multiplier of " + width)};
      if (std::find(c.variables.begin(), c.variables.end(), s.base) == c.variables.end()) {
        throw Error(ErrorCode::BadScaleRef, width + " -> " + s.base);
      }
      if (!(s.multiplier > 0.0)) throw Error(ErrorCode::ConfigInvalid, "multiplier of " + width + " must be > 0");
      if (c.params.count(width)) throw Error(ErrorCode::ConfigInvalid, width + " is both a param and a width");
      c.width_scales[width] = s;
      c.width_scale_order.push_back(width);
    }
  }

  if (const YAML::Node pins = root["subckt_pins"]; pins && !pins.IsNull()) {
    if (!pins.IsSequence()) throw Error(ErrorCode::ConfigInvalid, "subckt_pins must be a list");
    for (const auto& p : pins) c.subckt_pins.push_back(trim(scalar(p, "pin")));
  }
  if (const YAML::Node sig = root["testbench_signals"]; sig && !sig.IsNull()) {
    if (!sig.IsMap()) throw Error(ErrorCode::ConfigInvalid, "testbench_signals must be a map");
    for (const auto& kv : sig) c.testbench_signals[trim(kv.first.as<std::string>())] = trim(scalar(kv.second, "net"));
  }
  if (const YAML::Node ms = root["metric_scales"]; ms && !ms.IsNull()) {
    if (!ms.IsMap()) throw Error(ErrorCode::ConfigInvalid, "metric_scales must be a map");
    for (const auto& kv : ms) {
      const auto key = kv.first.as<std::string>();
      c.metric_scales[key] = number(kv.second, "metric_scales." + key);
    }
  }

  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (recognized_keys().count(key)) continue;
    c.passthrough[key] = YAML::Dump(kv.second);
  }

  c.spec = parse_spec(c.user_specs_metric);
  check_templates(c);
  return c;
}

BenchmarkConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string stem = path;
  if (auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
  if (auto dot = stem.find_last_of('.'); dot != std::string::npos) stem = stem.substr(0, dot);
  return parse_config(ss.str(), stem);
}

std::string serialize_config(const BenchmarkConfig& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << c.name;
  out << YAML::Key << "pdk_lib_path" << YAML::Value << YAML::DoubleQuoted << c.pdk_lib_path;
  out << YAML::Key << "results_dir" << YAML::Value << YAML::DoubleQuoted << c.results_dir;
  out << YAML::Key << "user_specs" << YAML::Value << YAML::DoubleQuoted << c.user_specs;
  out << YAML::Key << "user_specs_metric" << YAML::Value << YAML::DoubleQuoted << c.user_specs_metric;

  if (!c.params.empty()) {
    out << YAML::Key << "params" << YAML::Value << YAML::BeginMap;
    for (const auto& k : c.param_order) out << YAML::Key << k << YAML::Value << format_number(c.params.at(k));
    out << YAML::EndMap;
  }

  out << YAML::Key << "variable" << YAML::Value << YAML::BeginMap;
  for (const auto& v : c.variables) out << YAML::Key << v << YAML::Value << YAML::Null;
  out << YAML::EndMap;

  out << YAML::Key << "W_values" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double w : c.w_values) out << format_number(w);
  out << YAML::EndSeq;

  if (!c.width_scales.empty()) {
    out << YAML::Key << "width_scales" << YAML::Value << YAML::BeginMap;
    for (const auto& w : c.width_scale_order) {
      const auto& s = c.width_scales.at(w);
      out << YAML::Key << w << YAML::Value << YAML::Flow << YAML::BeginSeq << s.base
          << format_number(s.multiplier) << YAML::EndSeq;
    }
    out << YAML::EndMap;
  }

  out << YAML::Key << "subckt_name" << YAML::Value << c.subckt_name;
  if (!c.subckt_pins.empty()) {
    out << YAML::Key << "subckt_pins" << YAML::Value << YAML::BeginSeq;
    for (const auto& p : c.subckt_pins) out << YAML::DoubleQuoted << p;
    out << YAML::EndSeq;
  }
  if (!c.testbench_signals.empty()) {
    out << YAML::Key << "testbench_signals" << YAML::Value << YAML::BeginMap;
    for (const auto& [pin, net] : c.testbench_signals) {
      out << YAML::Key << YAML::DoubleQuoted << pin << YAML::Value << YAML::DoubleQuoted << net;
    }
    out << YAML::EndMap;
  }

  out << YAML::Key << "metrics" << YAML::Value << YAML::BeginSeq;
  for (const auto& m : c.metrics) out << m;
  out << YAML::EndSeq;

  if (!c.metric_scales.empty()) {
    out << YAML::Key << "metric_scales" << YAML::Value << YAML::BeginMap;
    for (const auto& [k, v] : c.metric_scales) out << YAML::Key << k << YAML::Value << format_number(v);
    out << YAML::EndMap;
  }

  for (const auto& [k, text] : c.passthrough) {
    out << YAML::Key << k << YAML::Value << YAML::Load(text);
  }

  out << YAML::Key << "ota_subckt_template" << YAML::Value << YAML::Literal << c.subckt_template;
  out << YAML::Key << "testbench_template" << YAML::Value << YAML::Literal << c.testbench_template;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::map<std::string, double> resolve_widths(const BenchmarkConfig& config, const Assignment& assignment) {
  std::map<std::string, double> values;
  for (const auto& var : config.variables) {
    auto it = assignment.find(var);
    if (it == assignment.end()) throw Error(ErrorCode::MissingAssignment, var);
    if (std::find(config.w_values.begin(), config.w_values.end(), it->second) == config.w_values.end()) {
      throw Error(ErrorCode::ValueOffGrid, var + " = " + format_number(it->second));
    }
    values[var] = it->second;
  }
  for (const auto& [width, scale] : config.width_scales) {
    values[width] = values.at(scale.base) * scale.multiplier;
  }
  return values;
}

RenderedDeck render_deck(const BenchmarkConfig& config, const Assignment& assignment, std::string_view corner) {
  RenderedDeck deck;
  auto& subs = deck.substitutions;
  for (const auto& [k, v] : config.params) subs[k] = format_number(v);
  for (const auto& [k, v] : resolve_widths(config, assignment)) subs[k] = format_number(v);
  subs["pdk_lib_path"] = config.pdk_lib_path;
  subs["subckt_name"] = config.subckt_name;
  subs["corner"] = std::string(corner);

  std::string pins;
  for (const auto& pin : config.subckt_pins) {
    if (!pins.empty()) pins += ' ';
    auto it = config.testbench_signals.find(pin);
    pins += it == config.testbench_signals.end() ? pin : it->second;
  }
  subs["inst_pins"] = pins;

  deck.netlist_text = render_template(config.subckt_template, subs);
  subs["ota_subckt"] = deck.netlist_text;
  deck.testbench_text = render_template(config.testbench_template, subs);
  return deck;
}

}  // namespace sizerforge
