#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "sizerforge/agents.hpp"
#include "sizerforge/error.hpp"
#include "sizerforge/numeric.hpp"

using nlohmann::json;

namespace sizerforge {

namespace {

[[noreturn]] void violation(const std::string& msg) { throw Error(ErrorCode::SchemaViolation, msg); }

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Drops fence lines, // comments and trailing commas outside strings.
std::string scrub(const std::string& raw) {
  std::string text;
  std::size_t pos = 0;
  while (pos < raw.size()) {
    std::size_t eol = raw.find('\n', pos);
    if (eol == std::string::npos) eol = raw.size();
    std::string line = raw.substr(pos, eol - pos);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line.compare(first, 3, "```") != 0) text += line + "\n";
    pos = eol + 1;
  }
  std::string out;
  bool in_str = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_str) {
      out += c;
      if (c == '\\' && i + 1 < text.size()) out += text[++i];
      else if (c == '"') in_str = false;
      continue;
    }
    if (c == '"') in_str = true;
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      while (i < text.size() && text[i] != '\n') ++i;
      out += '\n';
      continue;
    }
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (j < text.size() && (text[j] == '}' || text[j] == ']')) continue;
    }
    out += c;
  }
  return out;
}

std::string outer_object(const std::string& text) {
  auto start = text.find('{');
  if (start == std::string::npos) throw Error(ErrorCode::JsonUnparseable, "no JSON object in response");
  int depth = 0;
  bool in_str = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    char c = text[i];
    if (in_str) {
      if (c == '\\') ++i;
      else if (c == '"') in_str = false;
      continue;
    }
    if (c == '"') in_str = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return text.substr(start, i - start + 1);
  }
  throw Error(ErrorCode::JsonUnparseable, "unbalanced braces in response");
}

enum class Type { String, Number, Integer, Object, Array, Any };

struct Field {
  std::string name;
  Type type;
  bool required = false;
  std::vector<std::string> allowed = {};
};

void check_value(json& v, const Field& f, const std::string& where) {
  const std::string path = where + f.name;
  if ((f.type == Type::Number || f.type == Type::Integer) && v.is_string()) {
    double d = 0.0;
    if (!parse_number(v.get<std::string>(), d)) violation(path + " is not a number");
    v = d;
  }
  switch (f.type) {
    case Type::String:
      if (!v.is_string()) violation(path + " must be a string");
      break;
    case Type::Number:
      if (!v.is_number()) violation(path + " must be a number");
      break;
    case Type::Integer: {
      if (!v.is_number()) violation(path + " must be an integer");
      double d = v.get<double>();
      if (d != static_cast<double>(static_cast<long long>(d))) violation(path + " must be an integer");
      v = static_cast<long long>(d);
      break;
    }
    case Type::Object:
      if (!v.is_object()) violation(path + " must be an object");
      break;
    case Type::Array:
      if (!v.is_array()) violation(path + " must be an array");
      break;
    case Type::Any:
      break;
  }
  if (!f.allowed.empty()) {
    std::string s = lower(v.get<std::string>());
    if (std::find(f.allowed.begin(), f.allowed.end(), s) == f.allowed.end()) {
      std::string list;
      for (const auto& a : f.allowed) list += (list.empty() ? "" : "|") + a;
      violation(path + " must be one of " + list + ", got '" + v.get<std::string>() + "'");
    }
    v = s;
  }
}

// Checks known fields; unknown keys are rejected when strict.
void check_object(json& obj, const std::vector<Field>& fields, bool strict, const std::string& where) {
  if (!obj.is_object()) violation((where.empty() ? "response" : where) + " must be an object");
  for (const auto& f : fields) {
    if (!obj.contains(f.name)) {
      if (f.required) violation("missing field " + where + f.name);
      continue;
    }
    check_value(obj[f.name], f, where);
  }
  if (!strict) return;
  for (const auto& [k, _] : obj.items()) {
    bool known = std::any_of(fields.begin(), fields.end(), [&](const Field& f) { return f.name == k; });
    if (!known) violation("unknown field " + where + k);
  }
}

const std::vector<std::string> kImpact = {"critical", "high", "medium", "low"};
const std::vector<std::string> kLevel = {"high", "medium", "low"};

void check_plan_body(json& j, bool required) {
  if (j.contains("variable_ranking") || required) {
    if (!j.contains("variable_ranking")) violation("missing field variable_ranking");
    auto& ranking = j["variable_ranking"];
    if (!ranking.is_array()) violation("variable_ranking must be an array");
    for (std::size_t i = 0; i < ranking.size(); ++i)
      check_object(ranking[i],
                   {{"rank", Type::Integer, true}, {"variable", Type::String, true},
                    {"impact_on_target", Type::String, true, kImpact}, {"reasoning", Type::String}},
                   false, "variable_ranking[" + std::to_string(i) + "].");
  }
  if (!j.contains("optimization_configuration")) {
    if (required) violation("missing field optimization_configuration");
    return;
  }
  auto& cfg = j["optimization_configuration"];
  check_object(cfg, {{"variables_to_optimize", Type::Object, true}, {"variables_fixed", Type::Object, false}}, true,
               "optimization_configuration.");
  for (auto& [name, v] : cfg["variables_to_optimize"].items()) {
    const std::string where = "variables_to_optimize." + name + ".";
    check_object(v,
                 {{"rank", Type::Integer}, {"search_space", Type::Array, true}, {"num_choices", Type::Integer},
                  {"sensitivity", Type::String, false, kImpact}},
                 false, where);
    for (auto& x : v["search_space"]) check_value(x, {"search_space[]", Type::Number}, where);
  }
  if (cfg.contains("variables_fixed"))
    for (auto& [name, v] : cfg["variables_fixed"].items())
      check_object(v,
                   {{"rank", Type::Integer}, {"fixed_value", Type::Number, true},
                    {"risk_if_suboptimal", Type::String, false, kLevel}},
                   false, "variables_fixed." + name + ".");
}

}  // namespace

json parse_agent_json(const std::string& raw, AgentSchema schema) {
  json j = json::parse(outer_object(scrub(raw)), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::JsonUnparseable, "response is not valid JSON");

  switch (schema) {
    case AgentSchema::Understanding:
      check_object(j,
                   {{"circuit_topology_overview", Type::String, true},
                    {"optimization_variables_mapping", Type::String, true},
                    {"optimization_variables_impact", Type::Any, true},
                    {"variable_interactions", Type::String, true},
                    {"key_insights_for_optimization", Type::Array, true},
                    {"variable_sensitivity", Type::Object}},
                   true, "");
      if (j["key_insights_for_optimization"].empty()) violation("key_insights_for_optimization is empty");
      for (const auto& s : j["key_insights_for_optimization"])
        if (!s.is_string()) violation("key_insights_for_optimization must hold strings");
      break;
    case AgentSchema::Plan:
      check_object(j,
                   {{"optimization_target", Type::String},
                    {"num_variables_to_optimize", Type::Integer},
                    {"variable_ranking", Type::Array, true},
                    {"optimization_configuration", Type::Object, true},
                    {"search_space_summary", Type::Object}},
                   true, "");
      check_plan_body(j, true);
      break;
    case AgentSchema::Inner:
      check_object(j,
                   {{"action", Type::String, true, {"search", "stop"}},
                    {"method", Type::String},
                    {"n_samples", Type::Integer},
                    {"parameters", Type::Object},
                    {"reasoning", Type::String},
                    {"confidence", Type::String, false, kLevel},
                    {"expected_improvement", Type::Any},
                    {"convergence_assessment", Type::String}},
                   true, "");
      if (j["action"] == "search") {
        if (!j.contains("method")) violation("search action needs a method");
        if (!j.contains("n_samples")) violation("search action needs n_samples");
        if (j["n_samples"].get<long long>() < 1) violation("n_samples must be >= 1");
      }
      break;
    case AgentSchema::Outer: {
      check_object(j,
                   {{"optimization_target", Type::String},
                    {"regeneration_reasoning", Type::String},
                    {"action_taken", Type::String, true,
                     {"continue_current", "expand_ranges", "narrow_ranges", "unfix_variables", "change_focus",
                      "converged"}},
                    {"changes_from_previous", Type::String},
                    {"variable_ranking", Type::Array},
                    {"optimization_configuration", Type::Object},
                    {"search_space_summary", Type::Object},
                    {"expected_improvement", Type::Any},
                    {"confidence", Type::String, false, kLevel}},
                   true, "");
      const std::string a = j["action_taken"];
      check_plan_body(j, a != "continue_current" && a != "converged");
      break;
    }
  }
  return j;
}

}  // namespace sizerforge
