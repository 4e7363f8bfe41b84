#pragma once

// Landmark selection by greedy magnitude maximization and the rank-K cell
// hash built on the resulting landmarks.

#include <compare>
#include <cstddef>
#include <span>
#include <vector>

#include "goex/types.hpp"

namespace goex {

/// Ordered K-tuple of landmark indices (0-based), nearest landmark first.
struct CellId {
  std::vector<std::size_t> ranks;

  auto operator<=>(const CellId&) const = default;
  bool operator==(const CellId&) const = default;
};

struct LandmarkSet {
  std::vector<State> states;                  // all T generated states
  std::vector<std::size_t> landmark_indices;  // L distinct indices into states
  double scale = 1.0;                         // frozen after the first L states
  // magnitude_trace[i] is the landmark magnitude after state i was considered.
  // Entries before L-1 hold the magnitude of the first i+1 states.
  std::vector<double> magnitude_trace;

  std::vector<State> landmarks() const;
};

inline std::size_t default_initial_states(std::size_t num_landmarks) {
  const double l = static_cast<double>(num_landmarks);
  return num_landmarks <= 1 ? num_landmarks : static_cast<std::size_t>(std::ceil(l * std::log(l)));
}

/// Draws T states from `global` and keeps the L of them with the largest
/// magnitude found by single-swap greedy replacement. Indistinct draws are
/// retried up to 100 times before DuplicateStateError.
LandmarkSet generate_landmarks(const Dissimilarity& dis, std::size_t num_landmarks,
                               std::size_t num_states, const GlobalGenerator& global, Rng& rng);

/// Indices of the K landmarks nearest to x, ties broken by lower index.
CellId state_cell(const Dissimilarity& dis, std::span<const State> landmarks, std::size_t rank,
                  const State& x);

}  // namespace goex
