#pragma once

// Similarity matrices, weightings, magnitude and diversity of finite
// dissimilarity spaces, plus the scale cutoffs that make weightings positive.

#include <span>
#include <utility>

#include <Eigen/Dense>

#include "goex/types.hpp"

namespace goex {

/// Square, symmetric, nonnegative matrix with zeros exactly on the diagonal.
/// Entries may be +inf. Construction rejects anything else.
class DissimilarityMatrix {
 public:
  explicit DissimilarityMatrix(Eigen::MatrixXd entries);

  /// Pairwise matrix of `dis` over `states`; only the upper triangle is
  /// evaluated and mirrored.
  static DissimilarityMatrix pairwise(std::span<const State> states, const Dissimilarity& dis);

  Eigen::Index size() const { return d_.rows(); }
  double operator()(Eigen::Index j, Eigen::Index k) const { return d_(j, k); }
  const Eigen::MatrixXd& entries() const { return d_; }

  /// Smallest off-diagonal entry (+inf when n < 2).
  double min_off_diagonal() const;

 private:
  Eigen::MatrixXd d_;
};

struct SimilarityMatrix {
  Eigen::MatrixXd entries;
  double scale = 0.0;
};

struct Weighting {
  Eigen::VectorXd components;
  double scale = 0.0;
  // Max-norm residual of Zw - 1 before any repair.
  double residual = 0.0;
  // Negative components were removed by a uniform shift w - min(w).
  bool repaired = false;
  // Z was numerically all-ones; components set to 1 without a solve.
  bool degenerate = false;

  Eigen::Index size() const { return components.size(); }
};

struct ScaleCutoffs {
  double diag_lower = 0.0;
  double diag_upper = 0.0;
  double strong = 0.0;
  double positive = 0.0;
};

enum class CutoffKind { kStrong, kPositive };

/// exp(-t d) entrywise. Infinite dissimilarities become exactly 0.
SimilarityMatrix similarity(const DissimilarityMatrix& d, double t);

/// Solves Z w = 1. Throws SingularSystemError if no solution meeting
/// ||Zw - 1||_inf < 1e-8 n can be produced.
Weighting solve_weighting(const SimilarityMatrix& z);

double magnitude(const Weighting& w);

/// Similarity-sensitive diversity of order q in [1, inf]. q = 1 and q = inf
/// use the limiting forms.
double diversity(const SimilarityMatrix& z, const Eigen::VectorXd& p, double q);

Eigen::VectorXd max_diversity_distribution(const Weighting& w);

/// Bounds on the scale beyond which exp(-t d) is diagonally dominant.
std::pair<double, double> diag_dominance_bounds(const DissimilarityMatrix& d);

/// Minimal scale at which exp(-t d) is positive semidefinite and has a
/// positive weighting, found by bisection. Callers should use
/// t * (1 + sqrt(eps)).
double strong_cutoff(const DissimilarityMatrix& d);

/// As strong_cutoff but without the semidefiniteness requirement; suitable
/// when d is known to yield positive definite similarity matrices.
double positive_cutoff(const DissimilarityMatrix& d);

ScaleCutoffs scale_cutoffs(const DissimilarityMatrix& d);

/// Scale to actually compute weightings at: cutoff * (1 + sqrt(eps)). When the
/// cutoff collapses to 0 (two points, or no finite dissimilarities) every
/// positive scale qualifies and 1 / (smallest finite off-diagonal entry) is used.
double operating_scale(const DissimilarityMatrix& d, CutoffKind kind);

/// Weighting at operating_scale, with the 1-point space handled directly.
Weighting weighting_at_cutoff(const DissimilarityMatrix& d, CutoffKind kind);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& z);

}  // namespace goex
