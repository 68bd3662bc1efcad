#include "sizerforge/harness.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>
#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sizerforge/error.hpp"
#include "sizerforge/fom.hpp"
#include "sizerforge/numeric.hpp"
#include "sizerforge/spec_expr.hpp"
#include "sizerforge/surrogate_models.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sizerforge {

namespace {

const std::vector<std::string> kHarnessMethods = {"autosizer", "ga_baseline", "bo_baseline", "turbo_baseline", "lhs"};

MethodSpec method_from_node(const YAML::Node& n) {
  MethodSpec m;
  if (n.IsScalar()) {
    m.name = n.as<std::string>();
    // "autosizer(llm)" shorthand
    auto open = m.name.find('(');
    if (open != std::string::npos && m.name.back() == ')') {
      m.backend = m.name.substr(open + 1, m.name.size() - open - 2);
      m.name = m.name.substr(0, open);
    }
  } else if (n.IsMap()) {
    if (!n["name"]) throw Error(ErrorCode::MissingKey, "matrix method entry needs `name`");
    m.name = n["name"].as<std::string>();
    if (n["backend"]) m.backend = n["backend"].as<std::string>();
    if (n["use_cu"]) m.use_cu = n["use_cu"].as<bool>();
    if (n["use_ssd"]) m.use_ssd = n["use_ssd"].as<bool>();
    if (n["use_oe"]) m.use_oe = n["use_oe"].as<bool>();
    if (n["use_srl"]) m.use_srl = n["use_srl"].as<bool>();
  } else {
    throw Error(ErrorCode::ConfigInvalid, "matrix method entries are names or maps");
  }
  if (std::find(kHarnessMethods.begin(), kHarnessMethods.end(), m.name) == kHarnessMethods.end())
    throw Error(ErrorCode::ConfigInvalid, "unknown matrix method " + m.name);
  return m;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

std::string safe_name(std::string s) {
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.') c = '_';
  return s;
}

}  // namespace

std::string MethodSpec::label() const {
  std::string out = name;
  if (name == "autosizer") {
    out += "(" + (backend.rfind("replay:", 0) == 0 ? std::string("replay") : backend) + ")";
    std::string off;
    if (!use_cu) off += "-cu";
    if (!use_ssd) off += "-ssd";
    if (!use_oe) off += "-oe";
    if (!use_srl) off += "-srl";
    out += off;
  }
  return out;
}

std::vector<std::uint64_t> TrialMatrix::trial_seeds() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out;
  for (std::size_t k = 0; k < trials; ++k) out.push_back(base_seed + k);
  return out;
}

TrialMatrix parse_matrix(const std::string& text, const std::string& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("matrix is not valid YAML: ") + e.what());
  }
  if (!root.IsMap()) throw Error(ErrorCode::ConfigInvalid, "matrix document must be a map");
  TrialMatrix m;
  m.base_dir = base_dir;
  if (!root["circuits"]) throw Error(ErrorCode::MissingKey, "matrix needs `circuits`");
  if (!root["methods"]) throw Error(ErrorCode::MissingKey, "matrix needs `methods`");
  for (const auto& c : root["circuits"]) m.circuits.push_back(c.as<std::string>());
  for (const auto& n : root["methods"]) m.methods.push_back(method_from_node(n));
  if (root["trials"]) m.trials = root["trials"].as<std::size_t>();
  if (root["seeds"])
    for (const auto& s : root["seeds"]) m.seeds.push_back(s.as<std::uint64_t>());
  if (root["base_seed"]) m.base_seed = root["base_seed"].as<std::uint64_t>();
  if (root["budget"]) m.budget = root["budget"].as<std::size_t>();
  if (root["inner_cap"]) m.inner_cap = root["inner_cap"].as<std::size_t>();
  if (root["outer_cap"]) m.outer_cap = root["outer_cap"].as<std::size_t>();
  if (root["evaluator"]) m.evaluator = root["evaluator"].as<std::string>();
  if (root["workers"]) m.workers = root["workers"].as<std::size_t>();
  if (root["results_dir"]) m.results_dir = root["results_dir"].as<std::string>();

  if (m.circuits.empty() || m.methods.empty() || m.trials == 0)
    throw Error(ErrorCode::ConfigInvalid, "matrix axes must be non-empty");
  if (!m.seeds.empty() && m.seeds.size() != m.trials)
    throw Error(ErrorCode::ConfigInvalid, "matrix lists " + std::to_string(m.seeds.size()) + " seeds for " +
                                              std::to_string(m.trials) + " trials");
  if (!m.results_dir.empty() && fs::path(m.results_dir).is_relative() && !base_dir.empty())
    m.results_dir = (fs::path(base_dir) / m.results_dir).string();
  return m;
}

TrialMatrix load_matrix(const std::string& path) {
  return parse_matrix(read_text(path), fs::path(path).parent_path().string());
}

BenchmarkConfig load_circuit(const std::string& entry, const std::string& base_dir) {
  if (entry.rfind("surrogate:", 0) == 0) {
    const std::string id = entry.substr(10);
    return parse_config(surrogate_config_yaml(id), id);
  }
  fs::path p(entry);
  if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
  return load_config(p.string());
}

bool spec_satisfied(const BenchmarkConfig& config, const std::map<std::string, double>& raw_metrics) {
  std::map<std::string, double> metrics = raw_metrics;
  try {
    const Fom fom = compute_fom(split_directions(config.spec), raw_metrics);
    if (fom.is_failed()) return false;
    metrics[kFomMetric] = fom.value();
    return evaluate_spec(config.spec, metrics).pass;
  } catch (const Error&) {
    return false;
  }
}

TrialResult summarize_trial(const RunResult& run, const BenchmarkConfig& config, const std::string& circuit,
                            const std::string& method, std::uint64_t seed) {
  TrialResult t;
  t.circuit = circuit;
  t.method = method;
  t.seed = seed;
  t.evals_used = run.evals_used;
  t.wall_time = run.wall_time;
  t.sim_time = run.sim_time;
  t.outer_loops_used = run.outer_loops_used;
  t.spaces = run.space_generations;
  Fom best = Fom::failed();
  for (const auto& r : run.history.records()) {
    if (r.valid() && r.fom > best) best = r.fom;
    if (!best.is_failed()) t.trajectory.emplace_back(r.eval_index, best.value());
  }
  if (!run.best) {
    t.error = run.outcome;
    return t;
  }
  t.valid = true;
  t.best_fom = run.best->fom.value();
  t.feasible_reported = run.best->feasible;
  t.best_raw_metrics = run.best->raw_metrics;
  t.spec_pass = spec_satisfied(config, run.best->raw_metrics);
  t.evals_to_best = run.evals_to_best;
  return t;
}

CellSummary summarize_cell(const std::vector<TrialResult>& trials) {
  CellSummary c;
  if (trials.empty()) return c;
  c.circuit = trials.front().circuit;
  c.method = trials.front().method;
  c.trials = trials.size();
  std::vector<double> fom, evals, time;
  std::size_t pass = 0;
  for (const auto& t : trials) {
    if (t.valid && t.spec_pass) ++pass;
    if (!t.valid) continue;
    fom.push_back(t.best_fom);
    evals.push_back(static_cast<double>(t.evals_to_best));
    time.push_back(t.wall_time);
  }
  c.valid_trials = fom.size();
  if (!fom.empty()) {
    c.fom_mean = mean(fom);
    c.fom_std = sample_stddev(fom);
    c.evals_mean = mean(evals);
    c.evals_std = sample_stddev(evals);
    c.time_mean_s = mean(time);
    c.time_std_s = sample_stddev(time);
  }
  c.sr_pct = 100.0 * static_cast<double>(pass) / static_cast<double>(trials.size());
  return c;
}

MatrixReport run_matrix(const TrialMatrix& matrix) {
  MatrixReport report;
  const auto seeds = matrix.trial_seeds();
  for (const auto& circuit : matrix.circuits) {
    std::optional<BenchmarkConfig> config;
    std::string config_error;
    try {
      config = load_circuit(circuit, matrix.base_dir);
    } catch (const std::exception& e) {
      config_error = e.what();
    }
    for (const auto& method : matrix.methods) {
      std::vector<TrialResult> cell;
      for (auto seed : seeds) {
        TrialResult t;
        t.circuit = circuit;
        t.method = method.label();
        t.seed = seed;
        if (!config) {
          t.error = config_error;
          cell.push_back(t);
          continue;
        }
        try {
          const std::string trial_dir =
              matrix.results_dir.empty()
                  ? std::string()
                  : (fs::path(matrix.results_dir) / "runs" / safe_name(config->name) / safe_name(t.method) /
                     ("seed_" + std::to_string(seed)))
                        .string();
          auto spec = evaluator_spec_for(*config, matrix.evaluator);
          if (!trial_dir.empty()) spec.workdir = (fs::path(trial_dir) / "sim").string();
          auto evaluator = make_evaluator(spec);
          std::optional<ResultCache> cache;
          RunOptions options;
          options.budget = matrix.budget;
          options.inner_cap = matrix.inner_cap;
          options.outer_cap = matrix.outer_cap;
          options.seed = seed;
          options.workers = matrix.workers;
          if (spec.kind == EvaluatorSpec::Kind::Spice && !matrix.results_dir.empty()) {
            cache.emplace((fs::path(matrix.results_dir) / "cache").string());
            options.cache = &*cache;
          }
          RunResult run;
          if (method.name == "autosizer") {
            options.use_cu = method.use_cu;
            options.use_ssd = method.use_ssd;
            options.use_oe = method.use_oe;
            options.use_srl = method.use_srl;
            auto client = make_llm_client(
                method.backend, trial_dir.empty() ? std::string() : (fs::path(trial_dir) / "transcripts").string());
            DecisionAgent agent(*config, client);
            run = sizerforge::run(*config, *evaluator, agent, options);
          } else {
            run = run_baseline(*config, *evaluator, method.name, options);
          }
          if (!trial_dir.empty()) write_run_outputs(run, *config, trial_dir);
          t = summarize_trial(run, *config, circuit, method.label(), seed);
        } catch (const std::exception& e) {
          spdlog::error("trial {} / {} / seed {} failed: {}", circuit, method.label(), seed, e.what());
          t.valid = false;
          t.error = e.what();
        }
        cell.push_back(t);
      }
      report.cells.push_back(summarize_cell(cell));
      report.cells.back().circuit = circuit;
      report.cells.back().method = method.label();
      report.trials.insert(report.trials.end(), cell.begin(), cell.end());
    }
  }
  return report;
}

std::string render_table(const MatrixReport& report) {
  std::size_t cw = 7, mw = 6;
  for (const auto& c : report.cells) {
    cw = std::max(cw, c.circuit.size());
    mw = std::max(mw, c.method.size());
  }
  std::string out = fmt::format("{:<{}}  {:<{}}  {:>22}  {:>18}  {:>18}  {:>6}\n", "Circuit", cw, "Method", mw, "FOM",
                                "Evals", "Time (s)", "SR%");
  for (const auto& c : report.cells) {
    auto pm = [](double m, double s, int prec) { return fmt::format("{:.{}f} ± {:.{}f}", m, prec, s, prec); };
    std::string fom = c.valid_trials ? pm(c.fom_mean, c.fom_std, 4) : "-";
    std::string evals = c.valid_trials ? pm(c.evals_mean, c.evals_std, 1) : "-";
    std::string time = c.valid_trials ? pm(c.time_mean_s, c.time_std_s, 2) : "-";
    // "±" is two bytes in UTF-8; pad on display width.
    auto pad = [](const std::string& s, std::size_t w) {
      std::size_t width = s.size() - (s.find("±") != std::string::npos ? 1 : 0);
      return std::string(width < w ? w - width : 0, ' ') + s;
    };
    out += fmt::format("{:<{}}  {:<{}}  {}  {}  {}  {:>6.1f}\n", c.circuit, cw, c.method, mw, pad(fom, 22),
                       pad(evals, 18), pad(time, 18), c.sr_pct);
  }
  return out;
}

json report_to_json(const MatrixReport& report) {
  json trials = json::array(), cells = json::array();
  for (const auto& t : report.trials) {
    json traj = json::array();
    for (const auto& [i, f] : t.trajectory) traj.push_back({i, f});
    json spaces = json::array();
    for (const auto& s : t.spaces) spaces.push_back(space_to_json(s));
    trials.push_back({{"circuit", t.circuit},
                      {"method", t.method},
                      {"seed", t.seed},
                      {"valid", t.valid},
                      {"error", t.error},
                      {"best_fom", t.best_fom},
                      {"feasible_reported", t.feasible_reported},
                      {"spec_pass", t.spec_pass},
                      {"evals_to_best", t.evals_to_best},
                      {"evals_used", t.evals_used},
                      {"wall_time_s", t.wall_time},
                      {"sim_time_s", t.sim_time},
                      {"outer_loops_used", t.outer_loops_used},
                      {"best_raw_metrics", t.best_raw_metrics},
                      {"trajectory", traj},
                      {"spaces", spaces}});
  }
  for (const auto& c : report.cells)
    cells.push_back({{"circuit", c.circuit},
                     {"method", c.method},
                     {"trials", c.trials},
                     {"valid_trials", c.valid_trials},
                     {"fom_mean", c.fom_mean},
                     {"fom_std", c.fom_std},
                     {"evals_mean", c.evals_mean},
                     {"evals_std", c.evals_std},
                     {"time_mean_s", c.time_mean_s},
                     {"time_std_s", c.time_std_s},
                     {"sr_pct", c.sr_pct}});
  return {{"cells", cells}, {"trials", trials}};
}

MatrixReport report_from_json(const json& j) {
  MatrixReport r;
  for (const auto& c : j.at("cells")) {
    CellSummary s;
    s.circuit = c.at("circuit");
    s.method = c.at("method");
    s.trials = c.at("trials");
    s.valid_trials = c.at("valid_trials");
    s.fom_mean = c.at("fom_mean");
    s.fom_std = c.at("fom_std");
    s.evals_mean = c.at("evals_mean");
    s.evals_std = c.at("evals_std");
    s.time_mean_s = c.at("time_mean_s");
    s.time_std_s = c.at("time_std_s");
    s.sr_pct = c.at("sr_pct");
    r.cells.push_back(s);
  }
  for (const auto& tj : j.at("trials")) {
    TrialResult t;
    t.circuit = tj.at("circuit");
    t.method = tj.at("method");
    t.seed = tj.at("seed");
    t.valid = tj.at("valid");
    t.error = tj.value("error", "");
    t.best_fom = tj.at("best_fom");
    t.feasible_reported = tj.value("feasible_reported", false);
    t.spec_pass = tj.at("spec_pass");
    t.evals_to_best = tj.at("evals_to_best");
    t.evals_used = tj.at("evals_used");
    t.wall_time = tj.at("wall_time_s");
    t.sim_time = tj.value("sim_time_s", 0.0);
    t.outer_loops_used = tj.value("outer_loops_used", 0);
    if (tj.contains("best_raw_metrics")) t.best_raw_metrics = tj["best_raw_metrics"].get<std::map<std::string, double>>();
    for (const auto& p : tj.value("trajectory", json::array()))
      t.trajectory.emplace_back(p.at(0).get<std::uint64_t>(), p.at(1).get<double>());
    r.trials.push_back(t);
  }
  return r;
}

void emit_reports(const MatrixReport& report, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir + ": " + ec.message());
  const fs::path root(dir);
  write_text(root / "results.json", report_to_json(report).dump(2) + "\n");
  write_text(root / "table.txt", render_table(report));

  std::string traj = "circuit,method,seed,eval_index,best_fom_so_far\n";
  for (const auto& t : report.trials)
    for (const auto& [i, f] : t.trajectory)
      traj += fmt::format("{},{},{},{},{}\n", t.circuit, t.method, t.seed, i, format_number(f));
  write_text(root / "trajectories.csv", traj);

  std::string ranges = "circuit,method,seed,generation,variable,min,max,fixed\n";
  for (const auto& t : report.trials)
    for (const auto& s : t.spaces)
      for (const auto& v : s.variables()) {
        const bool fixed = s.is_fixed(v);
        const double lo = fixed ? s.fixed().at(v) : s.levels(v).front();
        const double hi = fixed ? s.fixed().at(v) : s.levels(v).back();
        ranges += fmt::format("{},{},{},{},{},{},{},{}\n", t.circuit, t.method, t.seed, s.generation(), v,
                              format_number(lo), format_number(hi), fixed ? "true" : "false");
      }
  write_text(root / "space_ranges.csv", ranges);
}

}  // namespace sizerforge
