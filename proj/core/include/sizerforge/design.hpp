#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>

namespace sizerforge {

using Assignment = std::map<std::string, double>;

/// A point of the sizing grid. The id is a content hash of the sorted
/// assignment, so equal assignments always share an id.
class Design {
 public:
  Design() = default;
  explicit Design(Assignment assignment);

  const Assignment& assignment() const noexcept { return assignment_; }
  const std::string& id() const noexcept { return id_; }
  double at(const std::string& var) const { return assignment_.at(var); }

  friend bool operator==(const Design& a, const Design& b) { return a.id_ == b.id_ && a.assignment_ == b.assignment_; }

 private:
  Assignment assignment_;
  std::string id_;
};

/// Figure of merit, or the Failed sentinel. Failed orders below every finite
/// value and compares equal only to itself.
class Fom {
 public:
  constexpr Fom() = default;
  constexpr explicit Fom(double v) : value_(v), failed_(false) {}
  static constexpr Fom failed() { return Fom(); }

  constexpr bool is_failed() const noexcept { return failed_; }
  constexpr double value() const noexcept { return value_; }
  /// -inf for Failed; convenient for selection code.
  double score() const noexcept;

  friend std::partial_ordering operator<=>(const Fom& a, const Fom& b) noexcept;
  friend bool operator==(const Fom& a, const Fom& b) noexcept;

 private:
  double value_ = 0.0;
  bool failed_ = true;
};

enum class SimStatus { Ok, SimFailed, MetricMissing };

std::string_view to_string(SimStatus s);
SimStatus sim_status_from_string(std::string_view s);

struct EvaluatedDesign {
  Design design;
  std::map<std::string, double> raw_metrics;
  std::map<std::string, double> normalized;
  Fom fom;
  bool feasible = false;
  SimStatus sim_status = SimStatus::Ok;
  std::string failure_reason;
  int iteration = 0;
  int outer_loop = 0;
  std::string method;
  /// 1-based, dense over a history.
  std::uint64_t eval_index = 0;
  double wall_time = 0.0;
  bool from_cache = false;

  bool valid() const noexcept { return sim_status == SimStatus::Ok && !fom.is_failed(); }
};

}  // namespace sizerforge
