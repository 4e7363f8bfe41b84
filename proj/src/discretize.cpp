#include "goex/discretize.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "goex/magnitude.hpp"

namespace goex {

namespace {

constexpr int kDuplicateRetries = 100;

State draw_distinct(const GlobalGenerator& global, Rng& rng, std::span<const State> seen) {
  for (int attempt = 0; attempt <= kDuplicateRetries; ++attempt) {
    State x = global(rng);
    if (std::find(seen.begin(), seen.end(), x) == seen.end()) return x;
  }
  throw DuplicateStateError("global generator keeps producing previously drawn states");
}

// Prefix magnitudes for the trace. A repaired (shifted) weighting overstates
// the magnitude, so those are recomputed from the unshifted solve.
double magnitude_at(const Eigen::MatrixXd& d, double t) {
  if (d.rows() == 1) return 1.0;
  const SimilarityMatrix z = similarity(DissimilarityMatrix(d), t);
  const Weighting w = solve_weighting(z);
  if (!w.repaired) return magnitude(w);
  return z.entries.partialPivLu().solve(Eigen::VectorXd::Ones(d.rows())).sum();
}

}  // namespace

std::vector<State> LandmarkSet::landmarks() const {
  std::vector<State> out;
  out.reserve(landmark_indices.size());
  for (std::size_t i : landmark_indices) out.push_back(states[i]);
  return out;
}

LandmarkSet generate_landmarks(const Dissimilarity& dis, std::size_t num_landmarks,
                               std::size_t num_states, const GlobalGenerator& global, Rng& rng) {
  if (num_landmarks < 1) throw std::invalid_argument("need at least one landmark");
  if (num_states < num_landmarks) throw std::invalid_argument("T < L");

  LandmarkSet out;
  out.states.reserve(num_states);
  for (std::size_t i = 0; i < num_landmarks; ++i) {
    out.states.push_back(draw_distinct(global, rng, out.states));
  }
  out.landmark_indices.resize(num_landmarks);
  std::iota(out.landmark_indices.begin(), out.landmark_indices.end(), std::size_t{0});

  const auto l = static_cast<Eigen::Index>(num_landmarks);
  Eigen::MatrixXd d = DissimilarityMatrix::pairwise(out.states, dis).entries();
  if (num_landmarks >= 2) {
    out.scale = operating_scale(DissimilarityMatrix(d), CutoffKind::kStrong);
  }

  out.magnitude_trace.reserve(num_states);
  for (Eigen::Index i = 1; i < l; ++i) {
    out.magnitude_trace.push_back(magnitude_at(d.topLeftCorner(i, i), out.scale));
  }
  Eigen::VectorXd w = Eigen::VectorXd::Ones(1);
  double current = 1.0;
  if (num_landmarks >= 2) {
    const Weighting wt = solve_weighting(similarity(DissimilarityMatrix(d), out.scale));
    w = wt.components;
    current = magnitude(wt);
  }
  out.magnitude_trace.push_back(current);

  for (std::size_t i = num_landmarks; i < num_states; ++i) {
    Eigen::Index weakest = 0;
    w.minCoeff(&weakest);
    out.states.push_back(draw_distinct(global, rng, out.states));
    const State& candidate = out.states.back();

    Eigen::MatrixXd trial = d;
    for (Eigen::Index k = 0; k < l; ++k) {
      const double v = k == weakest ? 0.0 : dis(candidate, out.states[out.landmark_indices[k]]);
      trial(weakest, k) = v;
      trial(k, weakest) = v;
    }
    if (num_landmarks >= 2) {
      try {
        const Weighting wt = solve_weighting(similarity(DissimilarityMatrix(trial), out.scale));
        const double mag = magnitude(wt);
        if (mag > current) {
          d = std::move(trial);
          w = wt.components;
          current = mag;
          out.landmark_indices[weakest] = i;
        }
      } catch (const SingularSystemError&) {
        // A candidate that makes the system singular is a near-duplicate; skip it.
      }
    }
    out.magnitude_trace.push_back(current);
  }
  return out;
}

CellId state_cell(const Dissimilarity& dis, std::span<const State> landmarks, std::size_t rank,
                  const State& x) {
  if (rank < 1 || rank > landmarks.size()) throw std::invalid_argument("rank cutoff K out of range");
  std::vector<double> dist(landmarks.size());
  for (std::size_t j = 0; j < landmarks.size(); ++j) dist[j] = dis(x, landmarks[j]);
  std::vector<std::size_t> order(landmarks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
  order.resize(rank);
  return CellId{std::move(order)};
}

}  // namespace goex
