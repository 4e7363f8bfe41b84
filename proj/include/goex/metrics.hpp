#pragma once

// Per-epoch quality-diversity scores of a finished run.

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "goex/engine.hpp"

namespace goex {

struct EliteDetail {
  std::vector<double> objectives;
  std::vector<double> weights;
  std::vector<std::size_t> cell_counts;  // evaluations in each elite's cell
  double scale = 0.0;
};

struct EpochScores {
  std::vector<double> qd;
  std::vector<double> wqd;
  std::vector<std::size_t> num_evals;
  std::vector<double> magnitude;
  std::vector<EliteDetail> detail;  // one per epoch, epoch j at index j-1

  std::size_t epochs() const { return qd.size(); }
};

/// Scores every epoch of `history`. Weightings for all epochs use the final
/// epoch's positive cutoff so magnitudes are comparable. `bounds` fixes the
/// objective normalization (min_f, max_f); by default the run's own range.
EpochScores score_history(std::span<const HistoryEntry> history, const Dissimilarity& dis,
                          std::optional<std::pair<double, double>> bounds = std::nullopt);

}  // namespace goex
