#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sizerforge/bench_config.hpp"
#include "sizerforge/design.hpp"

namespace sizerforge {

struct EvaluatorSpec {
  enum class Kind { Spice, Surrogate };
  Kind kind = Kind::Surrogate;
  // spice
  std::string executable = "ngspice";
  double timeout_s = 120.0;
  /// Decks and logs go here; a temporary directory when empty.
  std::string workdir;
  std::string corner = "tt";
  // surrogate
  std::string model_id;
  double noise = 0.0;
};

/// Reads `evaluator`, `surrogate_model`, `spice_executable`,
/// `spice_timeout` and `corner` from the config's passthrough keys.
/// `kind_override` is "spice" or "surrogate" (or empty).
EvaluatorSpec evaluator_spec_for(const BenchmarkConfig& config, const std::string& kind_override = {});

struct MetricScrape {
  std::map<std::string, double> values;
  std::string raw_log;
  std::vector<std::string> missing;
};

/// Picks `name = number` lines (print and meas output, optional `[i]` index
/// decoration) for the expected metrics, case-insensitively. The last
/// occurrence wins; engineering suffixes are not parsed.
MetricScrape scrape_metrics(const std::string& log, const std::vector<std::string>& expected);

/// What one simulator invocation produced.
struct RawResult {
  std::map<std::string, double> metrics;
  SimStatus status = SimStatus::Ok;
  std::string reason;
  std::string log;
  double sim_time = 0.0;
};

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  /// Never throws for per-design failures; those come back as a status.
  virtual RawResult run(const BenchmarkConfig& config, const Design& design) = 0;
  /// Identifies the evaluator in cache keys.
  virtual std::string fingerprint() const = 0;
};

class SurrogateEvaluator final : public Evaluator {
 public:
  explicit SurrogateEvaluator(std::string model_id, double noise = 0.0);
  RawResult run(const BenchmarkConfig& config, const Design& design) override;
  std::string fingerprint() const override;

 private:
  std::string model_id_;
  double noise_;
};

/// Runs `<executable> -b deck.sp` in a per-design directory with a timeout.
class SpiceEvaluator final : public Evaluator {
 public:
  /// Throws Error{EvaluatorUnavailable} when the executable is not found.
  explicit SpiceEvaluator(EvaluatorSpec spec);
  RawResult run(const BenchmarkConfig& config, const Design& design) override;
  std::string fingerprint() const override;

 private:
  EvaluatorSpec spec_;
  std::string executable_path_;
};

/// Resolves `name` on PATH (or as a path); nullopt when not executable.
std::optional<std::string> find_executable(const std::string& name);

std::unique_ptr<Evaluator> make_evaluator(const EvaluatorSpec& spec);

/// Content-addressed result store: one JSON file per key under `dir`, plus
/// an in-memory layer. An empty `dir` keeps everything in memory.
class ResultCache {
 public:
  explicit ResultCache(std::string dir = {});
  std::optional<RawResult> get(const std::string& key);
  void put(const std::string& key, const RawResult& result);
  std::size_t size() const;

 private:
  std::string dir_;
  mutable std::mutex mutex_;
  std::map<std::string, RawResult> memory_;
};

std::string cache_key(const BenchmarkConfig& config, const Design& design, const Evaluator& evaluator);

struct BatchOptions {
  /// 0 means one per logical CPU.
  std::size_t workers = 1;
  ResultCache* cache = nullptr;
  /// When set, each simulated design's raw log is written here.
  std::string log_dir;
};

/// Evaluates in input order. Cache hits (including repeats within the
/// batch) come back with from_cache set. Failures become per-design
/// statuses; only configuration errors throw.
std::vector<EvaluatedDesign> evaluate_batch(const BenchmarkConfig& config, const std::vector<Design>& designs,
                                            Evaluator& evaluator, const BatchOptions& options = {});

/// Turns a raw result into an evaluated design (metric scales, missing
/// metrics, FoM and feasibility).
EvaluatedDesign finish_evaluation(const BenchmarkConfig& config, const Design& design, const RawResult& raw);

}  // namespace sizerforge
