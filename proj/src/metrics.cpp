#include "goex/metrics.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "goex/magnitude.hpp"

namespace goex {

EpochScores score_history(std::span<const HistoryEntry> history, const Dissimilarity& dis,
                          std::optional<std::pair<double, double>> bounds) {
  if (history.empty()) throw std::invalid_argument("empty history");
  int epochs = 0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& e : history) {
    epochs = std::max(epochs, e.birth);
    lo = std::min(lo, e.objective);
    hi = std::max(hi, e.objective);
  }
  if (bounds) std::tie(lo, hi) = *bounds;
  double range = hi - lo;
  if (range == 0.0) range = 1.0;

  const auto count = static_cast<std::size_t>(epochs);
  EpochScores out;
  out.qd.resize(count);
  out.wqd.resize(count);
  out.num_evals.resize(count);
  out.magnitude.resize(count);
  out.detail.resize(count);

  double scale = 1.0;
  for (int j = epochs; j >= 1; --j) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < history.size(); ++i) {
      if (history[i].reign >= j && history[i].birth <= j) idx.push_back(i);
    }
    if (idx.empty()) throw std::runtime_error("epoch " + std::to_string(j) + " has no elites");

    std::vector<State> states;
    for (std::size_t i : idx) states.push_back(history[i].state);
    const DissimilarityMatrix d = DissimilarityMatrix::pairwise(states, dis);
    if (j == epochs && d.size() > 1) scale = operating_scale(d, CutoffKind::kPositive);
    Eigen::VectorXd w = d.size() == 1 ? Eigen::VectorXd::Ones(1)
                                      : solve_weighting(similarity(d, scale)).components;
    if (w.minCoeff() < 0.0) w.array() -= w.minCoeff();

    const double n = static_cast<double>(idx.size());
    const double total = w.sum();
    double qd = 0.0;
    double wqd = 0.0;
    EliteDetail& detail = out.detail[static_cast<std::size_t>(j - 1)];
    detail.scale = scale;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const HistoryEntry& e = history[idx[k]];
      const double quality = (hi - e.objective) / range;
      qd += quality;
      wqd += quality * w[static_cast<Eigen::Index>(k)] * n / total;
      detail.objectives.push_back(e.objective);
      detail.weights.push_back(w[static_cast<Eigen::Index>(k)]);
      detail.cell_counts.push_back(static_cast<std::size_t>(
          std::count_if(history.begin(), history.end(), [&](const HistoryEntry& o) { return o.cell == e.cell; })));
    }
    const auto slot = static_cast<std::size_t>(j - 1);
    out.qd[slot] = qd;
    out.wqd[slot] = wqd;
    out.magnitude[slot] = total;
    out.num_evals[slot] = static_cast<std::size_t>(
        std::count_if(history.begin(), history.end(), [&](const HistoryEntry& e) { return e.birth <= j; }));
  }
  return out;
}

}  // namespace goex
