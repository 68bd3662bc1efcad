#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sizerforge/design.hpp"

namespace sizerforge {

struct IterationSummary {
  int outer_loop = 0;
  int iteration = 0;
  std::string method;
  std::size_t n_samples = 0;
  /// Best FoM over the whole history after this iteration.
  Fom best_fom_so_far;
  /// Relative to the previous summary; nullopt for the first one.
  std::optional<double> improvement_pct;
};

/// Append-only evaluation record shared by every optimizer of a run.
///
/// Appends go through a mutex so a batch evaluator may append from worker
/// threads; readers that need a stable view take a snapshot().
class History {
 public:
  History() = default;
  History(const History& other);
  History& operator=(const History& other);

  /// Assigns the next dense eval_index. Returns nullopt (and stores nothing)
  /// when the design is already recorded.
  std::optional<std::uint64_t> append(EvaluatedDesign record);

  /// Adds a per-iteration summary using the current best. The best FoM in
  /// successive summaries never decreases.
  const IterationSummary& close_iteration(int outer_loop, int iteration, std::string method,
                                          std::size_t n_samples);

  bool contains(const std::string& design_id) const;
  const EvaluatedDesign* find(const std::string& design_id) const;

  const std::vector<EvaluatedDesign>& records() const noexcept { return records_; }
  const std::vector<IterationSummary>& summaries() const noexcept { return summaries_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  std::vector<EvaluatedDesign> snapshot() const;

  std::size_t valid_count() const;
  bool any_feasible() const;

 private:
  mutable std::mutex mutex_;
  std::vector<EvaluatedDesign> records_;
  std::vector<IterationSummary> summaries_;
  std::map<std::string, std::uint64_t> dedupe_index_;
};

struct BestResult {
  const EvaluatedDesign* record = nullptr;
  /// eval_index of the first record attaining the best FoM (1-based).
  std::uint64_t evals_to_best = 0;
};

/// Max FoM over sim_status == ok; ties go to the earliest record. Throws
/// Error{EmptyHistory} or Error{NoValidDesign}.
BestResult best_so_far(const History& history);
BestResult best_so_far(const std::vector<EvaluatedDesign>& records);

/// Best feasible record when one exists, else best_so_far. This is what a
/// run reports as its answer.
BestResult best_for_report(const std::vector<EvaluatedDesign>& records);

/// 100 * (best_now - best_k_ago) / |best_k_ago| over iteration summaries.
/// best_k_ago == 0 gives +inf when best_now > 0, else 0. Throws
/// Error{InsufficientHistory} when fewer than window + 1 summaries exist.
double improvement_pct(const std::vector<IterationSummary>& summaries, std::size_t window);
double improvement_pct(const History& history, std::size_t window);

nlohmann::json record_to_json(const EvaluatedDesign& record, bool include_timing = true);

/// One JSON object per line, self-describing field names. Without timing
/// the output is a pure function of the run inputs.
void write_history_jsonl(const History& history, std::ostream& out, bool include_timing = true);
std::vector<EvaluatedDesign> read_history_jsonl(std::istream& in);

}  // namespace sizerforge
