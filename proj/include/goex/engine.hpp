#pragma once

// Go-Explore over a dissimilarity space: elites per landmark cell, a go
// distribution that trades diversity against objective value, coupon-collector
// sized epochs, surrogate-guided probe selection by Pareto domination.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "goex/discretize.hpp"
#include "goex/magnitude.hpp"
#include "goex/problems.hpp"
#include "goex/types.hpp"

namespace goex {

struct HistoryEntry {
  State state;
  CellId cell;
  int birth = 1;   // epoch in which the state was evaluated
  int reign = 0;   // last epoch in which it was its cell's elite (0 = never)
  double objective = 0.0;
};

enum class Algorithm { kFull, kBaseline };

struct EngineConfig {
  std::size_t num_landmarks = 15;     // L
  std::size_t num_initial = 41;       // T
  std::size_t rank = 2;               // K
  std::size_t budget = 3000;          // M
  std::size_t max_effort = 128;       // mu
  std::uint64_t seed = 0;
  bool metric_is_euclidean = true;
  Algorithm algorithm = Algorithm::kFull;
  double baseline_bandwidth = 0.2;    // theta_0, baseline only
  std::size_t baseline_effort = 10;   // mu_*, baseline only
  std::size_t workers = 1;            // threads for batched objective evaluation

  void validate() const;
};

struct EpochProgress {
  int epoch = 0;
  std::size_t evaluations = 0;
  std::size_t expeditions = 0;
  std::size_t elites = 0;
};

struct RunResult {
  std::vector<HistoryEntry> history;
  LandmarkSet landmarks;
  int epochs = 1;
};

using ProgressSink = std::function<void(const EpochProgress&)>;

/// (phi - median) / (max - median); a zero denominator is replaced by 1.
/// Entries of -inf stay -inf.
Eigen::VectorXd quantile_normalize(const Eigen::VectorXd& phi);

/// p proportional to exp([log w] - [f]) with both terms quantile-normalized.
Eigen::VectorXd go_distribution(const Eigen::VectorXd& weights, const Eigen::VectorXd& objectives);

/// ceil(min(max(1, 2^-(f0 - f_prev) * prior), cap)).
std::size_t exploration_effort(double f_prev, double f_last, double prior_effort, std::size_t cap);

/// Rows rescaled to zero mean and unit sample standard deviation (rows with
/// no spread are only centered).
Eigen::MatrixXd standardize_rows(const Eigen::MatrixXd& objectives);

/// For each column j: max over columns k of min over rows i of a(i,j) - a(i,k).
/// Lower is less dominated.
Eigen::VectorXd pareto_domination(const Eigen::MatrixXd& objectives);

struct BandwidthResult {
  double bandwidth = 0.0;
  std::vector<State> probes;
  int halvings = 0;
};

inline constexpr int kMaxHalvings = 60;

/// Draws 2 mu probes around `base`; halves the bandwidth and redraws until at
/// least a quarter of them share the base cell. Throws
/// NonLocalizingGeneratorError after 60 halvings.
BandwidthResult adapt_bandwidth(const LocalGenerator& local, const State& base, double initial,
                                const CellId& base_cell, const Dissimilarity& dis,
                                std::span<const State> landmarks, std::size_t rank,
                                std::size_t max_effort, Rng& rng);

/// Inverse-CDF draw from a probability vector.
std::size_t sample_index(const Eigen::VectorXd& p, Rng& rng);

/// Evaluates `f` on every state, possibly on several threads. Results are in
/// input order regardless of `workers`.
std::vector<double> evaluate_batch(const Objective& f, std::span<const State> states,
                                   std::size_t workers);

RunResult run_go_explore(const ProblemDefinition& problem, const EngineConfig& cfg,
                         const ProgressSink& progress = {});

RunResult run_baseline(const ProblemDefinition& problem, const EngineConfig& cfg,
                       const ProgressSink& progress = {});

/// Dispatches on cfg.algorithm.
RunResult run(const ProblemDefinition& problem, const EngineConfig& cfg,
              const ProgressSink& progress = {});

/// Indices of entries whose reign equals `epoch`.
std::vector<std::size_t> elite_indices(std::span<const HistoryEntry> history, int epoch);

}  // namespace goex
