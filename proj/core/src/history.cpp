#include "sizerforge/history.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "sizerforge/error.hpp"

namespace sizerforge {

History::History(const History& other) {
  std::lock_guard lock(other.mutex_);
  records_ = other.records_;
  summaries_ = other.summaries_;
  dedupe_index_ = other.dedupe_index_;
}

History& History::operator=(const History& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mutex_, other.mutex_);
  records_ = other.records_;
  summaries_ = other.summaries_;
  dedupe_index_ = other.dedupe_index_;
  return *this;
}

std::optional<std::uint64_t> History::append(EvaluatedDesign record) {
  std::lock_guard lock(mutex_);
  if (dedupe_index_.count(record.design.id())) return std::nullopt;
  record.eval_index = records_.size() + 1;
  dedupe_index_[record.design.id()] = record.eval_index;
  records_.push_back(std::move(record));
  return records_.back().eval_index;
}

const IterationSummary& History::close_iteration(int outer_loop, int iteration, std::string method,
                                                 std::size_t n_samples) {
  std::lock_guard lock(mutex_);
  IterationSummary s;
  s.outer_loop = outer_loop;
  s.iteration = iteration;
  s.method = std::move(method);
  s.n_samples = n_samples;
  for (const auto& r : records_) {
    if (r.sim_status == SimStatus::Ok && r.fom > s.best_fom_so_far) s.best_fom_so_far = r.fom;
  }
  if (!summaries_.empty()) {
    const Fom prev = summaries_.back().best_fom_so_far;
    if (prev.is_failed()) {
      s.improvement_pct = s.best_fom_so_far.is_failed() ? 0.0 : std::numeric_limits<double>::infinity();
    } else if (prev.value() == 0.0) {
      s.improvement_pct = s.best_fom_so_far.value() > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    } else {
      s.improvement_pct = 100.0 * (s.best_fom_so_far.value() - prev.value()) / std::abs(prev.value());
    }
  }
  summaries_.push_back(std::move(s));
  return summaries_.back();
}

bool History::contains(const std::string& design_id) const {
  std::lock_guard lock(mutex_);
  return dedupe_index_.count(design_id) > 0;
}

const EvaluatedDesign* History::find(const std::string& design_id) const {
  std::lock_guard lock(mutex_);
  auto it = dedupe_index_.find(design_id);
  if (it == dedupe_index_.end()) return nullptr;
  return &records_[it->second - 1];
}

std::vector<EvaluatedDesign> History::snapshot() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::size_t History::valid_count() const {
  std::size_t n = 0;
  for (const auto& r : records_) n += r.valid();
  return n;
}

bool History::any_feasible() const {
  for (const auto& r : records_) {
    if (r.feasible) return true;
  }
  return false;
}

BestResult best_so_far(const std::vector<EvaluatedDesign>& records) {
  if (records.empty()) throw Error(ErrorCode::EmptyHistory, "no evaluations recorded");
  BestResult best;
  for (const auto& r : records) {
    if (r.sim_status != SimStatus::Ok || r.fom.is_failed()) continue;
    if (!best.record || r.fom > best.record->fom) {
      best.record = &r;
      best.evals_to_best = r.eval_index;
    }
  }
  if (!best.record) throw Error(ErrorCode::NoValidDesign, "every evaluation failed");
  return best;
}

BestResult best_so_far(const History& history) { return best_so_far(history.records()); }

BestResult best_for_report(const std::vector<EvaluatedDesign>& records) {
  BestResult best;
  for (const auto& r : records) {
    if (!r.feasible) continue;
    if (!best.record || r.fom > best.record->fom) {
      best.record = &r;
      best.evals_to_best = r.eval_index;
    }
  }
  if (best.record) return best;
  return best_so_far(records);
}

double improvement_pct(const std::vector<IterationSummary>& summaries, std::size_t window) {
  if (window == 0 || summaries.size() < window + 1) {
    throw Error(ErrorCode::InsufficientHistory,
                "need " + std::to_string(window + 1) + " iteration summaries, have " +
                    std::to_string(summaries.size()));
  }
  const Fom now = summaries.back().best_fom_so_far;
  const Fom then = summaries[summaries.size() - 1 - window].best_fom_so_far;
  if (then.is_failed()) return now.is_failed() ? 0.0 : std::numeric_limits<double>::infinity();
  if (then.value() == 0.0) return now.value() > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return 100.0 * (now.value() - then.value()) / std::abs(then.value());
}

double improvement_pct(const History& history, std::size_t window) {
  return improvement_pct(history.summaries(), window);
}

nlohmann::json record_to_json(const EvaluatedDesign& r, bool include_timing) {
  nlohmann::json j;
  j["eval_index"] = r.eval_index;
  j["design_id"] = r.design.id();
  j["assignment"] = r.design.assignment();
  j["raw_metrics"] = r.raw_metrics;
  j["normalized"] = r.normalized;
  j["fom"] = r.fom.is_failed() ? nlohmann::json(nullptr) : nlohmann::json(r.fom.value());
  j["feasible"] = r.feasible;
  j["sim_status"] = std::string(to_string(r.sim_status));
  if (!r.failure_reason.empty()) j["failure_reason"] = r.failure_reason;
  j["outer_loop"] = r.outer_loop;
  j["iteration"] = r.iteration;
  j["method"] = r.method;
  if (include_timing) j["wall_time"] = r.wall_time;
  j["from_cache"] = r.from_cache;
  return j;
}

void write_history_jsonl(const History& history, std::ostream& out, bool include_timing) {
  for (const auto& r : history.snapshot()) out << record_to_json(r, include_timing).dump() << '\n';
}

std::vector<EvaluatedDesign> read_history_jsonl(std::istream& in) {
  std::vector<EvaluatedDesign> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::JsonUnparseable, e.what());
    }
    EvaluatedDesign r;
    r.design = Design(j.at("assignment").get<Assignment>());
    r.raw_metrics = j.at("raw_metrics").get<std::map<std::string, double>>();
    r.normalized = j.value("normalized", std::map<std::string, double>{});
    r.fom = j.at("fom").is_null() ? Fom::failed() : Fom(j.at("fom").get<double>());
    r.feasible = j.at("feasible").get<bool>();
    r.sim_status = sim_status_from_string(j.at("sim_status").get<std::string>());
    r.failure_reason = j.value("failure_reason", "");
    r.outer_loop = j.value("outer_loop", 0);
    r.iteration = j.value("iteration", 0);
    r.method = j.value("method", "");
    r.eval_index = j.at("eval_index").get<std::uint64_t>();
    r.wall_time = j.value("wall_time", 0.0);
    r.from_cache = j.value("from_cache", false);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace sizerforge
