#include "sizerforge/evaluation.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <cctype>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include "sizerforge/error.hpp"
#include "sizerforge/fom.hpp"
#include "sizerforge/numeric.hpp"
#include "sizerforge/surrogate_models.hpp"

namespace fs = std::filesystem;

namespace sizerforge {

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file_atomic(const fs::path& p, const std::string& text) {
  std::ostringstream tmp_name;
  tmp_name << p.string() << ".tmp." << ::getpid() << "." << std::this_thread::get_id();
  {
    std::ofstream out(tmp_name.str(), std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp_name.str());
    out << text;
  }
  std::error_code ec;
  fs::rename(tmp_name.str(), p, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot rename into " + p.string() + ": " + ec.message());
}

}  // namespace

EvaluatorSpec evaluator_spec_for(const BenchmarkConfig& config, const std::string& kind_override) {
  EvaluatorSpec spec;
  std::string kind = kind_override.empty() ? config.passthrough_scalar("evaluator", "spice") : kind_override;
  kind = lower(kind);
  if (kind == "surrogate") {
    spec.kind = EvaluatorSpec::Kind::Surrogate;
    spec.model_id = config.passthrough_scalar("surrogate_model");
    if (spec.model_id.empty()) {
      throw Error(ErrorCode::ConfigInvalid, "surrogate evaluator needs a `surrogate_model` key");
    }
    surrogate_model(spec.model_id);
    double noise = 0.0;
    if (parse_number(config.passthrough_scalar("surrogate_noise", "0"), noise)) spec.noise = noise;
  } else if (kind == "spice") {
    spec.kind = EvaluatorSpec::Kind::Spice;
    spec.executable = config.passthrough_scalar("spice_executable", "ngspice");
    double timeout = spec.timeout_s;
    if (parse_number(config.passthrough_scalar("spice_timeout", "120"), timeout)) spec.timeout_s = timeout;
    if (!(spec.timeout_s > 0.0)) throw Error(ErrorCode::ConfigInvalid, "spice_timeout must be > 0");
    spec.corner = config.passthrough_scalar("corner", "tt");
  } else {
    throw Error(ErrorCode::ConfigInvalid, "evaluator must be spice or surrogate, got '" + kind + "'");
  }
  return spec;
}

MetricScrape scrape_metrics(const std::string& log, const std::vector<std::string>& expected) {
  static const std::regex line_re(
      R"(^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(\[\s*\d+\s*\])?\s*=\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?))");
  MetricScrape out;
  out.raw_log = log;
  std::map<std::string, std::string> wanted;
  for (const auto& m : expected) wanted[lower(m)] = m;
  std::istringstream in(log);
  std::string line;
  while (std::getline(in, line)) {
    std::smatch match;
    if (!std::regex_search(line, match, line_re)) continue;
    auto it = wanted.find(lower(match[1].str()));
    if (it == wanted.end()) continue;
    double v = 0.0;
    if (parse_number(match[3].str(), v)) out.values[it->second] = v;
  }
  for (const auto& m : expected) {
    if (!out.values.count(m)) out.missing.push_back(m);
  }
  return out;
}

SurrogateEvaluator::SurrogateEvaluator(std::string model_id, double noise)
    : model_id_(std::move(model_id)), noise_(noise) {
  surrogate_model(model_id_);
}

RawResult SurrogateEvaluator::run(const BenchmarkConfig&, const Design& design) {
  const auto t0 = std::chrono::steady_clock::now();
  RawResult r;
  try {
    r.metrics = surrogate_eval(model_id_, design.assignment(), noise_);
  } catch (const Error& e) {
    r.status = SimStatus::SimFailed;
    r.reason = e.what();
  }
  r.sim_time = seconds_since(t0);
  return r;
}

std::string SurrogateEvaluator::fingerprint() const {
  return "surrogate:" + model_id_ + ":noise=" + format_number(noise_);
}

std::optional<std::string> find_executable(const std::string& name) {
  if (name.empty()) return std::nullopt;
  if (name.find('/') != std::string::npos) {
    if (::access(name.c_str(), X_OK) == 0) return name;
    return std::nullopt;
  }
  const char* path = std::getenv("PATH");
  if (!path) return std::nullopt;
  std::istringstream dirs(path);
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    if (dir.empty()) continue;
    const fs::path candidate = fs::path(dir) / name;
    if (::access(candidate.c_str(), X_OK) == 0) return candidate.string();
  }
  return std::nullopt;
}

SpiceEvaluator::SpiceEvaluator(EvaluatorSpec spec) : spec_(std::move(spec)) {
  auto exe = find_executable(spec_.executable);
  if (!exe) {
    throw Error(ErrorCode::EvaluatorUnavailable,
                "SPICE executable '" + spec_.executable + "' not found on PATH; install ngspice or use --evaluator surrogate");
  }
  executable_path_ = *exe;
  if (spec_.workdir.empty()) {
    spec_.workdir = (fs::temp_directory_path() / ("sizerforge-" + std::to_string(::getpid()))).string();
  }
}

std::string SpiceEvaluator::fingerprint() const { return "spice:" + spec_.executable + ":" + spec_.corner; }

RawResult SpiceEvaluator::run(const BenchmarkConfig& config, const Design& design) {
  const auto t0 = std::chrono::steady_clock::now();
  RawResult r;
  const RenderedDeck deck = render_deck(config, design.assignment(), spec_.corner);
  const fs::path dir = fs::path(spec_.workdir) / design.id();
  fs::create_directories(dir);
  const fs::path deck_path = dir / "deck.sp";
  const fs::path log_path = dir / "ngspice.log";
  {
    std::ofstream out(deck_path, std::ios::binary | std::ios::trunc);
    out << deck.testbench_text;
  }

  const pid_t pid = ::fork();
  if (pid < 0) {
    r.status = SimStatus::SimFailed;
    r.reason = "fork failed";
    return r;
  }
  if (pid == 0) {
    const int fd = ::open(log_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd >= 0) {
      ::dup2(fd, STDOUT_FILENO);
      ::dup2(fd, STDERR_FILENO);
      ::close(fd);
    }
    if (::chdir(dir.c_str()) != 0) ::_exit(126);
    ::execl(executable_path_.c_str(), executable_path_.c_str(), "-b", "deck.sp", static_cast<char*>(nullptr));
    ::_exit(127);
  }

  int status = 0;
  bool timed_out = false;
  for (;;) {
    const pid_t w = ::waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (w < 0) break;
    if (seconds_since(t0) > spec_.timeout_s) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  r.sim_time = seconds_since(t0);
  r.log = read_file(log_path);
  if (timed_out) {
    r.status = SimStatus::SimFailed;
    r.reason = "timeout";
    return r;
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    r.status = SimStatus::SimFailed;
    r.reason = WIFEXITED(status) ? "exit status " + std::to_string(WEXITSTATUS(status)) : "killed by signal";
    return r;
  }
  const MetricScrape scrape = scrape_metrics(r.log, config.metrics);
  for (const auto& [name, value] : scrape.values) {
    auto s = config.metric_scales.find(name);
    r.metrics[name] = s == config.metric_scales.end() ? value : value * s->second;
  }
  return r;
}

std::unique_ptr<Evaluator> make_evaluator(const EvaluatorSpec& spec) {
  if (spec.kind == EvaluatorSpec::Kind::Surrogate) return std::make_unique<SurrogateEvaluator>(spec.model_id, spec.noise);
  return std::make_unique<SpiceEvaluator>(spec);
}

ResultCache::ResultCache(std::string dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create cache dir " + dir_ + ": " + ec.message());
  }
}

std::optional<RawResult> ResultCache::get(const std::string& key) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = memory_.find(key); it != memory_.end()) return it->second;
  }
  if (dir_.empty()) return std::nullopt;
  const fs::path p = fs::path(dir_) / (key + ".json");
  if (!fs::exists(p)) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(read_file(p));
    RawResult r;
    r.metrics = j.at("metrics").get<std::map<std::string, double>>();
    r.status = sim_status_from_string(j.at("status").get<std::string>());
    r.reason = j.value("reason", "");
    r.log = j.value("log", "");
    r.sim_time = j.value("sim_time", 0.0);
    std::lock_guard lock(mutex_);
    memory_[key] = r;
    return r;
  } catch (const std::exception& e) {
    spdlog::warn("ignoring unreadable cache entry {}: {}", p.string(), e.what());
    return std::nullopt;
  }
}

void ResultCache::put(const std::string& key, const RawResult& result) {
  {
    std::lock_guard lock(mutex_);
    memory_[key] = result;
  }
  if (dir_.empty()) return;
  nlohmann::json j;
  j["metrics"] = result.metrics;
  j["status"] = std::string(to_string(result.status));
  if (!result.reason.empty()) j["reason"] = result.reason;
  if (!result.log.empty()) j["log"] = result.log;
  j["sim_time"] = result.sim_time;
  write_file_atomic(fs::path(dir_) / (key + ".json"), j.dump());
}

std::size_t ResultCache::size() const {
  std::lock_guard lock(mutex_);
  return memory_.size();
}

std::string cache_key(const BenchmarkConfig& config, const Design& design, const Evaluator& evaluator) {
  std::string text = serialize_config(config);
  text += "\n--\n";
  for (const auto& [k, v] : design.assignment()) text += k + "=" + format_number(v) + ";";
  text += "\n--\n" + evaluator.fingerprint();
  return hex64(fnv1a(text)) + hex64(fnv1a(text, 0x84222325cbf29ce4ULL));
}

EvaluatedDesign finish_evaluation(const BenchmarkConfig& config, const Design& design, const RawResult& raw) {
  EvaluatedDesign e;
  e.design = design;
  e.raw_metrics = raw.metrics;
  e.sim_status = raw.status;
  e.failure_reason = raw.reason;
  e.wall_time = raw.sim_time;
  if (e.sim_status != SimStatus::Ok) {
    e.fom = Fom::failed();
    return e;
  }
  std::vector<std::string> missing;
  for (const auto& m : config.metrics) {
    if (m != kFomMetric && !raw.metrics.count(m)) missing.push_back(m);
  }
  for (const auto& c : config.spec.clauses) {
    if (c.metric != kFomMetric && !raw.metrics.count(c.metric) &&
        std::find(missing.begin(), missing.end(), c.metric) == missing.end()) {
      missing.push_back(c.metric);
    }
  }
  if (!missing.empty()) {
    e.sim_status = SimStatus::MetricMissing;
    e.failure_reason = "missing metrics:";
    for (const auto& m : missing) e.failure_reason += " " + m;
    e.fom = Fom::failed();
    return e;
  }
  const Assessment a = assess(config.spec, raw.metrics);
  e.fom = a.fom;
  e.feasible = a.feasible;
  e.normalized = a.normalized;
  return e;
}

std::vector<EvaluatedDesign> evaluate_batch(const BenchmarkConfig& config, const std::vector<Design>& designs,
                                            Evaluator& evaluator, const BatchOptions& options) {
  ResultCache local;
  ResultCache& cache = options.cache ? *options.cache : local;

  std::vector<std::string> keys;
  std::map<std::string, std::size_t> owner;
  std::vector<std::optional<RawResult>> results(designs.size());
  std::vector<bool> cached(designs.size(), false);
  std::vector<std::size_t> to_run;
  for (std::size_t i = 0; i < designs.size(); ++i) {
    keys.push_back(cache_key(config, designs[i], evaluator));
    if (owner.count(keys[i])) continue;
    owner[keys[i]] = i;
    if (auto hit = cache.get(keys[i])) {
      results[i] = std::move(*hit);
      cached[i] = true;
    } else {
      to_run.push_back(i);
    }
  }

  auto run_one = [&](std::size_t i) {
    RawResult r;
    try {
      r = evaluator.run(config, designs[i]);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::TemplateUnresolvable || e.code() == ErrorCode::MissingAssignment ||
          e.code() == ErrorCode::ValueOffGrid) {
        throw;
      }
      r.status = SimStatus::SimFailed;
      r.reason = e.what();
    } catch (const std::exception& e) {
      r.status = SimStatus::SimFailed;
      r.reason = e.what();
    }
    results[i] = std::move(r);
  };

  std::size_t workers = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, to_run.size());
  if (workers <= 1) {
    for (auto i : to_run) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k; (k = next.fetch_add(1)) < to_run.size();) {
          try {
            run_one(to_run[k]);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  for (auto i : to_run) {
    cache.put(keys[i], *results[i]);
    if (!options.log_dir.empty() && !results[i]->log.empty()) {
      fs::create_directories(options.log_dir);
      std::ofstream(fs::path(options.log_dir) / (designs[i].id() + ".log")) << results[i]->log;
    }
  }

  std::vector<EvaluatedDesign> out;
  out.reserve(designs.size());
  for (std::size_t i = 0; i < designs.size(); ++i) {
    const std::size_t o = owner.at(keys[i]);
    const bool hit = cached[o] || o != i;
    EvaluatedDesign e = finish_evaluation(config, designs[i], *results[o]);
    e.from_cache = hit;
    if (hit) e.wall_time = 0.0;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace sizerforge
