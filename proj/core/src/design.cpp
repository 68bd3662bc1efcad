#include "sizerforge/design.hpp"

#include <limits>

#include "sizerforge/error.hpp"
#include "sizerforge/numeric.hpp"

namespace sizerforge {

Design::Design(Assignment assignment) : assignment_(std::move(assignment)) {
  std::string key;
  for (const auto& [name, value] : assignment_) {
    key += name;
    key += '=';
    key += format_number(value);
    key += ';';
  }
  id_ = hex64(fnv1a(key));
}

double Fom::score() const noexcept {
  return failed_ ? -std::numeric_limits<double>::infinity() : value_;
}

std::partial_ordering operator<=>(const Fom& a, const Fom& b) noexcept {
  if (a.failed_ && b.failed_) return std::partial_ordering::equivalent;
  if (a.failed_) return std::partial_ordering::less;
  if (b.failed_) return std::partial_ordering::greater;
  return a.value_ <=> b.value_;
}

bool operator==(const Fom& a, const Fom& b) noexcept {
  if (a.failed_ || b.failed_) return a.failed_ == b.failed_;
  return a.value_ == b.value_;
}

std::string_view to_string(SimStatus s) {
  switch (s) {
    case SimStatus::Ok: return "ok";
    case SimStatus::SimFailed: return "sim_failed";
    case SimStatus::MetricMissing: return "metric_missing";
  }
  return "ok";
}

SimStatus sim_status_from_string(std::string_view s) {
  if (s == "ok") return SimStatus::Ok;
  if (s == "sim_failed") return SimStatus::SimFailed;
  if (s == "metric_missing") return SimStatus::MetricMissing;
  throw Error(ErrorCode::SchemaViolation, "unknown sim_status '" + std::string(s) + "'");
}

}  // namespace sizerforge
