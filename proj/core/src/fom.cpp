#include "sizerforge/fom.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

#include "sizerforge/error.hpp"

namespace sizerforge {

namespace {

double lookup(const std::map<std::string, double>& m, const std::string& name) {
  auto it = m.find(name);
  if (it == m.end()) throw Error(ErrorCode::MissingMetric, name);
  return it->second;
}

void check_target(const MetricTarget& t) {
  if (!(t.target > 0.0) || !std::isfinite(t.target)) {
    throw Error(ErrorCode::InvalidThreshold, t.metric + " target must be finite and > 0 to normalise");
  }
}

}  // namespace

Fom compute_fom(const SpecDirections& dirs, const std::map<std::string, double>& raw_metrics) {
  double num = 1.0;
  double den = 1.0;
  bool failed = false;
  for (const auto& t : dirs.maximize) {
    if (t.metric == kFomMetric) continue;
    check_target(t);
    const double y = lookup(raw_metrics, t.metric) / t.target;
    if (!(y > 0.0) || !std::isfinite(y)) failed = true;
    num *= y;
  }
  for (const auto& t : dirs.minimize) {
    if (t.metric == kFomMetric) continue;
    check_target(t);
    const double y = lookup(raw_metrics, t.metric) / t.target;
    if (!(y > 0.0) || !std::isfinite(y)) failed = true;
    den *= y;
  }
  if (failed) return Fom::failed();
  const double fom = num / den;
  if (!std::isfinite(fom)) return Fom::failed();
  return Fom(fom);
}

Assessment assess(const SpecExpr& spec, const std::map<std::string, double>& raw_metrics) {
  const SpecDirections dirs = split_directions(spec);
  Assessment a;
  a.fom = compute_fom(dirs, raw_metrics);

  for (const auto* set : {&dirs.maximize, &dirs.minimize}) {
    for (const auto& t : *set) {
      if (t.metric == kFomMetric) continue;
      a.normalized[t.metric] = raw_metrics.at(t.metric) / t.target;
    }
  }

  if (a.fom.is_failed()) {
    a.feasible = false;
    return a;
  }

  std::map<std::string, double> metrics = raw_metrics;
  if (auto it = metrics.find(kFomMetric); it != metrics.end()) {
    const double reported = it->second;
    const double rel = std::abs(reported - a.fom.value()) / std::max(std::abs(a.fom.value()), 1e-300);
    if (rel > 0.01) {
      spdlog::warn("simulator-reported fom {} differs from engine fom {} by {:.2f}%; using engine value",
                   reported, a.fom.value(), 100.0 * rel);
    }
  }
  metrics[kFomMetric] = a.fom.value();
  a.feasible = evaluate_spec(spec, metrics).pass;
  return a;
}

}  // namespace sizerforge
