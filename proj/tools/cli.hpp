#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "goex/engine.hpp"
#include "goex/problems.hpp"

namespace goex::cli {

inline constexpr const char* kVersion = "0.3.0";

enum ExitCode : int { kOk = 0, kUsage = 1, kConfigError = 2, kRuntimeError = 3 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  ProblemParams problem;
  EngineConfig engine;
  std::string output_dir = "run";
};

/// Parses and validates a config document; unknown keys are rejected.
/// Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

nlohmann::ordered_json history_record(std::size_t index, const HistoryEntry& e);
HistoryEntry parse_history_record(const nlohmann::json& rec);
std::vector<HistoryEntry> read_history(const std::filesystem::path& path);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::size_t> L, T, K, M, mu, workers;
  std::optional<std::string> algorithm;
  std::optional<double> theta0;
};

int cmd_run(const std::filesystem::path& config_path, const Overrides& overrides, bool quiet,
            std::ostream& out, std::ostream& err);

struct ScoreOptions {
  std::optional<double> min_f;
  std::optional<double> max_f;
  bool shared_bounds = false;  // normalize all runs by their common range
};

int cmd_score(const std::vector<std::filesystem::path>& run_dirs, const ScoreOptions& options,
              std::ostream& out, std::ostream& err);

/// "uniform", "zipf:<gamma>", "geometric:<ratio>" or "explicit:<p1,p2,...>".
std::vector<double> parse_distribution(const std::string& spec, std::size_t n);

int cmd_bounds(std::size_t n, std::size_t m, std::size_t c, const std::string& distribution,
               bool sweep, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace goex::cli
