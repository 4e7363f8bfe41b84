#include "goex/magnitude.hpp"

#include <algorithm>
#include <cmath>
#if defined(__SSE2__)
#include <xmmintrin.h>
#endif
#include <limits>
#include <stdexcept>
#include <string>

namespace goex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Below this entrywise distance from the all-ones matrix Z is treated as degenerate.
const double kDegenerate = std::pow(kEps, 0.75);

bool symmetric_pair(double a, double b) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= kSqrtEps * std::max(std::abs(a), std::abs(b));
}

Eigen::VectorXd ones(Eigen::Index n) { return Eigen::VectorXd::Ones(n); }

double residual_norm(const Eigen::MatrixXd& z, const Eigen::VectorXd& w) {
  return (z * w - ones(z.rows())).lpNorm<Eigen::Infinity>();
}

// 1 - Z w with the dot products accumulated in extended precision. Z is
// symmetric and only its lower triangle is read.
Eigen::VectorXd extended_residual(const Eigen::MatrixXd& z, const Eigen::VectorXd& w) {
  Eigen::VectorXd r(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    long double acc = 1.0L;
    for (Eigen::Index j = 0; j < i; ++j) {
      acc -= static_cast<long double>(z(i, j)) * static_cast<long double>(w[j]);
    }
    for (Eigen::Index j = i; j < z.rows(); ++j) {
      acc -= static_cast<long double>(z(j, i)) * static_cast<long double>(w[j]);
    }
    r[i] = static_cast<double>(acc);
  }
  return r;
}

// Mixed-precision iterative refinement. Near the cutoff Z is so ill
// conditioned that small weights are lost to rounding in a plain solve.
template <typename Factor>
Eigen::VectorXd refined_solve(const Factor& factor, const Eigen::MatrixXd& z) {
  Eigen::VectorXd w = factor.solve(ones(z.rows()));
  constexpr int kRefinements = 4;
  for (int it = 0; it < kRefinements && w.allFinite(); ++it) {
    const Eigen::VectorXd step = factor.solve(extended_residual(z, w));
    w += step;
    if (step.lpNorm<Eigen::Infinity>() <= kEps * w.lpNorm<Eigen::Infinity>()) break;
  }
  return w;
}

// Factorizations reused across bisection steps to avoid reallocating.
struct StepSolver {
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  Eigen::VectorXd w;

  // Reads only the lower triangle of z.
  bool cholesky(const Eigen::MatrixXd& z) {
    llt.compute(z);
    if (llt.info() != Eigen::Success) return false;
    w = llt.solve(ones(z.rows()));
    if (w.allFinite()) w += llt.solve(ones(z.rows()) - z.selfadjointView<Eigen::Lower>() * w);
    return true;
  }
  void pivoted(const Eigen::MatrixXd& z) {
    lu.compute(z);
    w = lu.solve(ones(z.rows()));
    if (w.allFinite()) w += lu.solve(ones(z.rows()) - z * w);
  }
};

bool all_positive(const Eigen::VectorXd& w) {
  return w.allFinite() && (w.array() > 0.0).all();
}

// Semidefiniteness with tolerance -1e-10 n on the smallest eigenvalue:
// Z + tol I admits a Cholesky factorization iff lambda_min(Z) > -tol.
bool is_psd(const Eigen::MatrixXd& z) {  // lower triangle only
  const double tol = 1e-10 * static_cast<double>(z.rows());
  Eigen::MatrixXd shifted = z;
  shifted.diagonal().array() += tol;
  Eigen::LLT<Eigen::MatrixXd> llt(shifted);
  return llt.info() == Eigen::Success;
}

// Flushes subnormals to zero for the lifetime of the guard. Similarities that
// small carry no information but slow every factorization step.
class FlushDenormals {
 public:
#if defined(__SSE2__)
  FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
  ~FlushDenormals() { _mm_setcsr(saved_); }

 private:
  unsigned saved_;
#endif
};

void mirror_lower(Eigen::MatrixXd& z) {
  z.triangularView<Eigen::StrictlyUpper>() = z.transpose();
}

// `accept` receives Z with only its lower triangle filled in.
template <class Accept>
double bisect_cutoff(const DissimilarityMatrix& d, Accept accept) {
  const Eigen::Index n = d.size();
  if (n < 2) throw std::invalid_argument("cutoff requires at least 2 points");
  double upper = std::log(static_cast<double>(n - 1)) / d.min_off_diagonal();
  if (!(upper > 0.0)) return 0.0;
  const FlushDenormals flush;
  Eigen::MatrixXd z(n, n);
  const double widest = d.entries().maxCoeff();
  double lower = 0.0;
  double t = upper;
  while (1.0 - lower / upper > kSqrtEps) {
    t = 0.5 * (lower + upper);
    for (Eigen::Index j = 0; j < n; ++j) {
      z.col(j).tail(n - j).array() = (-t * d.entries().col(j).tail(n - j).array()).exp();
    }
    // Scales where solve_weighting would take the all-ones shortcut are not
    // admissible: that vector does not solve Z w = 1.
    if (1.0 - std::exp(-t * widest) >= kDegenerate && accept(z)) {
      upper = t;
    } else {
      lower = t;
    }
  }
  return t;
}

}  // namespace

DissimilarityMatrix::DissimilarityMatrix(Eigen::MatrixXd entries) : d_(std::move(entries)) {
  if (d_.rows() != d_.cols()) throw std::invalid_argument("dissimilarity matrix not square");
  const Eigen::Index n = d_.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (d_(j, j) != 0.0) throw std::invalid_argument("dissimilarity diagonal not zero");
    for (Eigen::Index k = 0; k < n; ++k) {
      const double v = d_(j, k);
      if (std::isnan(v) || v < 0.0) {
        throw std::invalid_argument("dissimilarity entry not a nonnegative extended real");
      }
      if (j != k && !(v > 0.0)) {
        throw std::invalid_argument("dissimilarity degenerate: zero off the diagonal at (" +
                                    std::to_string(j) + "," + std::to_string(k) + ")");
      }
      if (k > j && !symmetric_pair(v, d_(k, j))) {
        throw std::invalid_argument("dissimilarity matrix not symmetric");
      }
    }
  }
}

DissimilarityMatrix DissimilarityMatrix::pairwise(std::span<const State> states,
                                                  const Dissimilarity& dis) {
  const auto n = static_cast<Eigen::Index>(states.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = j + 1; k < n; ++k) {
      d(j, k) = d(k, j) = dis(states[j], states[k]);
    }
  }
  return DissimilarityMatrix(std::move(d));
}

double DissimilarityMatrix::min_off_diagonal() const {
  double best = kInf;
  for (Eigen::Index j = 0; j < d_.rows(); ++j) {
    for (Eigen::Index k = 0; k < d_.cols(); ++k) {
      if (j != k) best = std::min(best, d_(j, k));
    }
  }
  return best;
}

SimilarityMatrix similarity(const DissimilarityMatrix& d, double t) {
  if (!(t > 0.0) || std::isinf(t)) throw std::invalid_argument("scale must be positive and finite");
  Eigen::MatrixXd z = (-t * d.entries().array()).exp().matrix();
  // Subnormal similarities are numerically zero and make factorizations crawl.
  z = (z.array() < std::numeric_limits<double>::min()).select(0.0, z);
  // -t * 0 is -0 and exp(-0) = 1; -t * inf = -inf and exp(-inf) = 0.
  return {std::move(z), t};
}

Weighting solve_weighting(const SimilarityMatrix& z) {
  const Eigen::MatrixXd& m = z.entries;
  if (m.rows() != m.cols()) throw std::invalid_argument("similarity matrix not square");
  const Eigen::Index n = m.rows();
  Weighting out;
  out.scale = z.scale;

  if ((m.array() - 1.0).abs().maxCoeff() < kDegenerate) {
    out.components = ones(n);
    out.degenerate = true;
    out.residual = residual_norm(m, out.components);
    return out;
  }

  Eigen::VectorXd w;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) w = refined_solve(llt, m);
  if (w.size() != n || !w.allFinite() || residual_norm(m, w) >= 1e-8 * static_cast<double>(n)) {
    w = refined_solve(Eigen::PartialPivLU<Eigen::MatrixXd>(m), m);
  }
  if (!w.allFinite()) throw SingularSystemError("similarity matrix is singular");
  out.residual = residual_norm(m, w);
  if (!(out.residual < 1e-8 * static_cast<double>(n))) {
    throw SingularSystemError("weighting residual " + std::to_string(out.residual) +
                              " exceeds tolerance; similarity matrix is numerically singular");
  }
  const double lowest = w.minCoeff();
  if (lowest < 0.0) {
    w.array() -= lowest;
    out.repaired = true;
  }
  out.components = std::move(w);
  return out;
}

double magnitude(const Weighting& w) { return w.components.sum(); }

double diversity(const SimilarityMatrix& z, const Eigen::VectorXd& p, double q) {
  if (std::isnan(q) || q < 1.0) throw std::invalid_argument("diversity order q must be >= 1");
  if (p.size() != z.entries.rows()) throw std::invalid_argument("distribution size mismatch");
  if ((p.array() < 0.0).any() || std::abs(p.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("p is not a probability vector");
  }
  const Eigen::VectorXd zp = z.entries * p;
  if (std::isinf(q)) {
    double largest = 0.0;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      if (p[j] > 0.0) largest = std::max(largest, zp[j]);
    }
    return 1.0 / largest;
  }
  if (q == 1.0) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      if (p[j] > 0.0) acc += p[j] * std::log(zp[j]);
    }
    return std::exp(-acc);
  }
  double acc = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (p[j] > 0.0) acc += p[j] * std::pow(zp[j], q - 1.0);
  }
  return std::exp(std::log(acc) / (1.0 - q));
}

Eigen::VectorXd max_diversity_distribution(const Weighting& w) {
  if ((w.components.array() < 0.0).any()) {
    throw std::invalid_argument("weighting has negative components");
  }
  const double total = w.components.sum();
  if (!(total > 0.0)) throw std::invalid_argument("weighting sums to zero");
  return w.components / total;
}

std::pair<double, double> diag_dominance_bounds(const DissimilarityMatrix& d) {
  const Eigen::Index n = d.size();
  if (n < 2) throw std::invalid_argument("diagonal dominance bounds need at least 2 points");
  double min_of_max = kInf;
  double min_of_min = kInf;
  for (Eigen::Index j = 0; j < n; ++j) {
    double row_max = 0.0;
    double row_min = kInf;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == j) continue;
      row_max = std::max(row_max, d(j, k));
      row_min = std::min(row_min, d(j, k));
    }
    min_of_max = std::min(min_of_max, row_max);
    min_of_min = std::min(min_of_min, row_min);
  }
  const double numer = std::log(static_cast<double>(n - 1));
  return {numer / min_of_max, numer / min_of_min};
}

double strong_cutoff(const DissimilarityMatrix& d) {
  StepSolver solver;
  return bisect_cutoff(d, [&solver](Eigen::MatrixXd& z) {
    if (solver.cholesky(z)) return all_positive(solver.w);
    // Semidefinite but singular to working precision.
    if (!is_psd(z)) return false;
    mirror_lower(z);
    solver.pivoted(z);
    return all_positive(solver.w);
  });
}

double positive_cutoff(const DissimilarityMatrix& d) {
  StepSolver solver;
  return bisect_cutoff(d, [&solver](Eigen::MatrixXd& z) {
    if (!solver.cholesky(z)) {
      mirror_lower(z);
      solver.pivoted(z);
    }
    return all_positive(solver.w);
  });
}

ScaleCutoffs scale_cutoffs(const DissimilarityMatrix& d) {
  ScaleCutoffs c;
  std::tie(c.diag_lower, c.diag_upper) = diag_dominance_bounds(d);
  c.strong = strong_cutoff(d);
  c.positive = positive_cutoff(d);
  return c;
}

double operating_scale(const DissimilarityMatrix& d, CutoffKind kind) {
  const double cutoff = kind == CutoffKind::kStrong ? strong_cutoff(d) : positive_cutoff(d);
  if (cutoff > 0.0) return cutoff * (1.0 + kSqrtEps);
  const double smallest = d.min_off_diagonal();
  return std::isfinite(smallest) ? 1.0 / smallest : 1.0;
}

Weighting weighting_at_cutoff(const DissimilarityMatrix& d, CutoffKind kind) {
  if (d.size() == 1) {
    Weighting w;
    w.components = ones(1);
    w.scale = 1.0;
    return w;
  }
  return solve_weighting(similarity(d, operating_scale(d, kind)));
}

double min_eigenvalue(const Eigen::MatrixXd& z) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(z, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace goex
