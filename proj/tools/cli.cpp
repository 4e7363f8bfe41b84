#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "goex/coupon.hpp"
#include "goex/metrics.hpp"

namespace goex::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get_or(const json& obj, const std::string& key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

std::size_t get_count(const json& obj, const std::string& key, std::size_t fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(where + "." + key + " must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

std::string algorithm_name(Algorithm a) { return a == Algorithm::kBaseline ? "baseline" : "full"; }

Algorithm parse_algorithm(const std::string& s) {
  if (s == "full") return Algorithm::kFull;
  if (s == "baseline") return Algorithm::kBaseline;
  throw ConfigError("algorithm must be 'full' or 'baseline', got '" + s + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  reject_unknown(doc, {"problem", "engine", "seed", "output_dir"}, "config");
  ExperimentConfig cfg;
  if (!doc.contains("problem")) throw ConfigError("config.problem is required");

  const json& p = doc.at("problem");
  reject_unknown(p, {"name", "N", "lambda", "A", "domain", "instance_seed"}, "problem");
  cfg.problem.name = get_or<std::string>(p, "name", "", "problem");
  const auto names = problem_names();
  if (std::find(names.begin(), names.end(), cfg.problem.name) == names.end()) {
    throw ConfigError("problem.name '" + cfg.problem.name + "' is not a known problem");
  }
  cfg.problem.dimension = static_cast<int>(get_count(p, "N", 2, "problem"));
  cfg.problem.lambda = static_cast<int>(get_count(p, "lambda", 100, "problem"));
  cfg.problem.amplitude = get_or<double>(p, "A", 10.0, "problem");
  cfg.problem.instance_seed = get_or<std::uint64_t>(p, "instance_seed", 0, "problem");
  if (p.contains("domain")) {
    const auto box = get_or<std::vector<double>>(p, "domain", {}, "problem");
    if (box.size() != 2 || !(box[0] < box[1])) throw ConfigError("problem.domain must be [lo, hi] with lo < hi");
    cfg.problem.domain_lo = box[0];
    cfg.problem.domain_hi = box[1];
  }
  if (cfg.problem.dimension < 1) throw ConfigError("problem.N must be >= 1");
  if (cfg.problem.lambda < 1) throw ConfigError("problem.lambda must be >= 1");

  const json e = doc.value("engine", json::object());
  reject_unknown(e, {"L", "T", "K", "M", "mu", "algorithm", "theta0", "baseline_effort",
                     "metric_is_euclidean", "workers"},
                 "engine");
  EngineConfig& ec = cfg.engine;
  ec.num_landmarks = get_count(e, "L", 15, "engine");
  ec.num_initial = get_count(e, "T", default_initial_states(ec.num_landmarks), "engine");
  ec.rank = get_count(e, "K", 2, "engine");
  ec.budget = get_count(e, "M", 3000, "engine");
  ec.max_effort = get_count(e, "mu", 128, "engine");
  ec.algorithm = parse_algorithm(get_or<std::string>(e, "algorithm", "full", "engine"));
  ec.baseline_bandwidth = get_or<double>(e, "theta0", 0.2, "engine");
  ec.baseline_effort = get_count(e, "baseline_effort", 10, "engine");
  ec.workers = get_count(e, "workers", 1, "engine");
  ec.metric_is_euclidean = get_or<bool>(e, "metric_is_euclidean", true, "engine");
  ec.seed = get_or<std::uint64_t>(doc, "seed", 0, "config");
  cfg.output_dir = get_or<std::string>(doc, "output_dir", "run", "config");

  try {
    ec.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& cfg) {
  const auto& p = cfg.problem;
  const auto& e = cfg.engine;
  return json{
      {"problem",
       {{"name", p.name},
        {"N", p.dimension},
        {"lambda", p.lambda},
        {"A", p.amplitude},
        {"domain", {p.domain_lo, p.domain_hi}},
        {"instance_seed", p.instance_seed}}},
      {"engine",
       {{"L", e.num_landmarks},
        {"T", e.num_initial},
        {"K", e.rank},
        {"M", e.budget},
        {"mu", e.max_effort},
        {"algorithm", algorithm_name(e.algorithm)},
        {"theta0", e.baseline_bandwidth},
        {"baseline_effort", e.baseline_effort},
        {"metric_is_euclidean", e.metric_is_euclidean},
        {"workers", e.workers}}},
      {"seed", e.seed},
      {"output_dir", cfg.output_dir},
  };
}

nlohmann::ordered_json history_record(std::size_t index, const HistoryEntry& e) {
  return nlohmann::ordered_json{{"index", index}, {"state", e.state},  {"cell", e.cell.ranks},
                                {"birth", e.birth}, {"reign", e.reign}, {"objective", e.objective}};
}

HistoryEntry parse_history_record(const json& rec) {
  HistoryEntry e;
  e.state = rec.at("state").get<State>();
  e.cell.ranks = rec.at("cell").get<std::vector<std::size_t>>();
  e.birth = rec.at("birth").get<int>();
  e.reign = rec.at("reign").get<int>();
  e.objective = rec.at("objective").get<double>();
  return e;
}

std::vector<HistoryEntry> read_history(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::vector<HistoryEntry> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const json rec = json::parse(line);
    if (rec.at("index").get<std::size_t>() != out.size()) {
      throw std::runtime_error("history records out of order in " + path.string());
    }
    out.push_back(parse_history_record(rec));
  }
  return out;
}

int cmd_run(const fs::path& config_path, const Overrides& o, bool quiet, std::ostream& out,
            std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
    auto& e = cfg.engine;
    if (o.seed) e.seed = *o.seed;
    if (o.output_dir) cfg.output_dir = *o.output_dir;
    if (o.L) {
      e.num_landmarks = *o.L;
      if (!o.T) e.num_initial = std::max(e.num_initial, default_initial_states(*o.L));
    }
    if (o.T) e.num_initial = *o.T;
    if (o.K) e.rank = *o.K;
    if (o.M) e.budget = *o.M;
    if (o.mu) e.max_effort = *o.mu;
    if (o.workers) e.workers = *o.workers;
    if (o.algorithm) e.algorithm = parse_algorithm(*o.algorithm);
    if (o.theta0) e.baseline_bandwidth = *o.theta0;
    try {
      e.validate();
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(ex.what());
    }
  } catch (const ConfigError& ex) {
    err << "config error: " << ex.what() << "\n";
    return kConfigError;
  }

  try {
    const ProblemDefinition problem = make_problem(cfg.problem);
    ProgressSink progress;
    if (!quiet) {
      progress = [&err](const EpochProgress& p) {
        err << "epoch " << p.epoch << " evaluations " << p.evaluations << " expeditions "
            << p.expeditions << " elites " << p.elites << "\n";
      };
    }
    const RunResult result = run(problem, cfg.engine, progress);

    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    std::ostringstream history;
    for (std::size_t i = 0; i < result.history.size(); ++i) {
      history << history_record(i, result.history[i]).dump() << "\n";
    }
    write_text(dir / "history.jsonl", history.str());

    const auto& lm = result.landmarks;
    json landmarks{{"scale", lm.scale},
                   {"landmark_indices", lm.landmark_indices},
                   {"landmarks", lm.landmarks()},
                   {"magnitude_trace", lm.magnitude_trace},
                   {"initial_states", lm.states}};
    write_text(dir / "landmarks.json", landmarks.dump(2) + "\n");
    write_text(dir / "config.echo.json", to_json(cfg).dump(2) + "\n");

    const auto elites = elite_indices(result.history, result.epochs);
    const auto best = std::min_element(result.history.begin(), result.history.end(),
                                       [](const auto& a, const auto& b) { return a.objective < b.objective; });
    json manifest{{"version", kVersion},
                  {"seed", cfg.engine.seed},
                  {"problem", cfg.problem.name},
                  {"algorithm", algorithm_name(cfg.engine.algorithm)},
                  {"evaluations", result.history.size()},
                  {"epochs", result.epochs},
                  {"elites", elites.size()},
                  {"best_objective", best->objective},
                  {"files", {"history.jsonl", "landmarks.json", "config.echo.json"}}};
    write_text(dir / "run_manifest.json", manifest.dump(2) + "\n");
    out << manifest.dump() << "\n";
  } catch (const std::exception& ex) {
    err << "run failed: " << ex.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}

int cmd_score(const std::vector<fs::path>& run_dirs, const ScoreOptions& options, std::ostream& out,
              std::ostream& err) {
  struct Loaded {
    fs::path dir;
    ExperimentConfig cfg;
    std::vector<HistoryEntry> history;
  };
  std::vector<Loaded> runs;
  try {
    for (const auto& dir : run_dirs) {
      Loaded l{dir, load_config(dir / "config.echo.json"), read_history(dir / "history.jsonl")};
      if (l.history.empty()) throw std::runtime_error("empty history in " + dir.string());
      runs.push_back(std::move(l));
    }
  } catch (const ConfigError& ex) {
    err << "config error: " << ex.what() << "\n";
    return kConfigError;
  } catch (const std::exception& ex) {
    err << "score failed: " << ex.what() << "\n";
    return kRuntimeError;
  }

  std::optional<std::pair<double, double>> shared;
  if (options.shared_bounds) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& r : runs) {
      for (const auto& e : r.history) {
        lo = std::min(lo, e.objective);
        hi = std::max(hi, e.objective);
      }
    }
    shared = std::pair{lo, hi};
  }

  struct Summary {
    std::vector<double> qd, wqd;
  };
  std::map<std::string, Summary> by_algorithm;
  try {
    for (const auto& r : runs) {
      std::optional<std::pair<double, double>> bounds = shared;
      if (options.min_f || options.max_f) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& e : r.history) {
          lo = std::min(lo, e.objective);
          hi = std::max(hi, e.objective);
        }
        if (bounds) std::tie(lo, hi) = *bounds;
        bounds = std::pair{options.min_f.value_or(lo), options.max_f.value_or(hi)};
      }
      const ProblemDefinition problem = make_problem(r.cfg.problem);
      const EpochScores scores = score_history(r.history, problem.dissimilarity, bounds);
      std::ostringstream csv;
      csv << std::setprecision(17) << "epoch,num_evals,qd,wqd,magnitude\n";
      for (std::size_t j = 0; j < scores.epochs(); ++j) {
        csv << (j + 1) << "," << scores.num_evals[j] << "," << scores.qd[j] << "," << scores.wqd[j]
            << "," << scores.magnitude[j] << "\n";
      }
      write_text(r.dir / "scores.csv", csv.str());
      auto& s = by_algorithm[algorithm_name(r.cfg.engine.algorithm)];
      s.qd.push_back(scores.qd.back());
      s.wqd.push_back(scores.wqd.back());
    }
  } catch (const std::exception& ex) {
    err << "score failed: " << ex.what() << "\n";
    return kRuntimeError;
  }

  if (runs.size() > 1) {
    auto mean_sd = [](const std::vector<double>& v) {
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
      return std::pair{mean, sd};
    };
    out << "algorithm,runs,qd_mean,qd_sd,wqd_mean,wqd_sd\n";
    for (const auto& [name, s] : by_algorithm) {
      const auto [qm, qs] = mean_sd(s.qd);
      const auto [wm, ws] = mean_sd(s.wqd);
      out << name << "," << s.qd.size() << "," << qm << "," << qs << "," << wm << "," << ws << "\n";
    }
  }
  return kOk;
}

std::vector<double> parse_distribution(const std::string& spec, std::size_t n) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  std::vector<double> p;
  if (kind == "explicit") {
    std::stringstream ss(arg);
    std::string tok;
    while (std::getline(ss, tok, ',')) p.push_back(std::stod(tok));
    if (n != 0 && p.size() != n) throw ConfigError("explicit distribution has the wrong length");
  } else {
    if (n == 0) throw ConfigError("n must be >= 1");
    p.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double rank = static_cast<double>(k + 1);
      if (kind == "uniform") {
        p[k] = 1.0;
      } else if (kind == "zipf") {
        p[k] = std::pow(rank, -std::stod(arg));
      } else if (kind == "geometric") {
        p[k] = std::pow(std::stod(arg), rank - 1.0);
      } else {
        throw ConfigError("unknown distribution '" + kind + "'");
      }
    }
  }
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  if (!(total > 0.0)) throw ConfigError("distribution has no mass");
  for (double& v : p) v /= total;
  return p;
}

int cmd_bounds(std::size_t n, std::size_t m, std::size_t c, const std::string& distribution, bool sweep,
               std::ostream& out, std::ostream& err) {
  std::vector<double> p;
  try {
    p = parse_distribution(distribution, n);
  } catch (const std::exception& ex) {
    err << "config error: " << ex.what() << "\n";
    return kConfigError;
  }
  const std::size_t types = p.size();
  auto one = [&](std::size_t mm) {
    const CouponBounds b = partial_collection_bounds(p, mm, c);
    json j{{"n", types}, {"m", mm}, {"c", c}, {"lower", b.lower}, {"upper", b.upper},
           {"harmonic", harmonic_lower_bound(types, mm)}};
    if (b.exact) j["exact"] = *b.exact;
    return j;
  };
  try {
    if (sweep) {
      json rows = json::array();
      for (std::size_t mm = 1; mm <= types; ++mm) rows.push_back(one(mm));
      out << rows.dump(2) << "\n";
    } else {
      out << one(m).dump(2) << "\n";
    }
  } catch (const std::invalid_argument& ex) {
    err << "config error: " << ex.what() << "\n";
    return kConfigError;
  } catch (const std::exception& ex) {
    err << "bounds failed: " << ex.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}

int main(int argc, char** argv) {
  CLI::App app{"Go-Explore over dissimilarity spaces with magnitude-driven diversity"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "Execute a configured run and write its outputs");
  std::string config_path;
  Overrides o;
  bool quiet = false;
  run_cmd->add_option("config", config_path, "Experiment config (JSON)")->required();
  run_cmd->add_option("--seed", o.seed, "RNG seed");
  run_cmd->add_option("--output_dir", o.output_dir, "Output directory");
  run_cmd->add_option("--L", o.L, "Number of landmarks");
  run_cmd->add_option("--T", o.T, "Number of initial states");
  run_cmd->add_option("--K", o.K, "Rank cutoff");
  run_cmd->add_option("--M", o.M, "Evaluation budget");
  run_cmd->add_option("--mu", o.mu, "Maximum per-expedition effort");
  run_cmd->add_option("--algorithm", o.algorithm, "full or baseline");
  run_cmd->add_option("--theta0", o.theta0, "Baseline bandwidth");
  run_cmd->add_option("--workers", o.workers, "Threads for objective evaluation");
  run_cmd->add_flag("--quiet", quiet, "Suppress per-epoch progress");

  auto* score_cmd = app.add_subcommand("score", "Write scores.csv for one or more run directories");
  std::vector<std::string> dirs;
  ScoreOptions so;
  score_cmd->add_option("run_dirs", dirs, "Run directories")->required();
  score_cmd->add_option("--min_f", so.min_f, "Objective value mapped to quality 1");
  score_cmd->add_option("--max_f", so.max_f, "Objective value mapped to quality 0");
  score_cmd->add_flag("--shared_bounds", so.shared_bounds, "Normalize all runs by their common range");

  auto* bounds_cmd = app.add_subcommand("bounds", "Print partial coupon collection bounds as JSON");
  std::size_t n = 16, m = 8, c = 16;
  std::string dist = "uniform";
  bool sweep = false;
  bounds_cmd->add_option("--n", n, "Number of coupon types");
  bounds_cmd->add_option("--m", m, "Number of distinct types to collect");
  bounds_cmd->add_option("--c", c, "Cutoff for partition bounds");
  bounds_cmd->add_option("--dist", dist, "uniform | zipf:<g> | geometric:<r> | explicit:<p1,...>");
  bounds_cmd->add_flag("--sweep", sweep, "Report every m from 1 to n");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  if (*run_cmd) return cmd_run(config_path, o, quiet, std::cout, std::cerr);
  if (*score_cmd) {
    std::vector<fs::path> paths(dirs.begin(), dirs.end());
    return cmd_score(paths, so, std::cout, std::cerr);
  }
  return cmd_bounds(n, m, c, dist, sweep, std::cout, std::cerr);
}

}  // namespace goex::cli
