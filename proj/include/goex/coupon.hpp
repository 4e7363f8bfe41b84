#pragma once

// Expected waiting times for partial coupon collection under a non-uniform
// distribution, and cheap bounds on them. Used to size each epoch's number of
// expeditions.

#include <cstddef>
#include <optional>
#include <vector>

namespace goex {

struct CouponBounds {
  std::optional<double> exact;
  double lower = 0.0;
  double upper = 0.0;
  // Input did not sum to 1 exactly and was renormalized.
  bool normalized = false;
};

/// Largest support size for which the inclusion-exclusion sum is evaluated.
inline constexpr std::size_t kMaxExactTypes = 16;
/// Largest cutoff for which the cutoff and deviation bounds are evaluated.
inline constexpr std::size_t kMaxCutoff = 16;

/// E(C_m): expected number of IID draws from p until m distinct types have
/// been seen, via the alternating inclusion-exclusion sum over subsets.
/// Requires |p| <= 16 and m <= nnz(p).
double expected_partial_exact(const std::vector<double>& p, std::size_t m);

/// E(C_n) for strictly positive p by trapezoidal quadrature of
/// int_0^inf 1 - prod_k (1 - exp(-p_k t)) dt.
double expected_full_integral(const std::vector<double>& p);

/// n (H_n - H_{n-m}): the expected time under the uniform distribution, which
/// bounds E(C_m) from below for every p.
double harmonic_lower_bound(std::size_t n, std::size_t m);

struct CouponOptions {
  // When false, exact values are still reported but never substituted for the
  // bounds, which then come only from the cutoff/deviation/harmonic/integral
  // estimates.
  bool exact_as_bounds = true;
};

/// Tightest available bounds on E(C_m) using cutoff c for the partition-based
/// bounds. Throws std::invalid_argument for m > nnz(p) or p that does not
/// sum to 1 within sqrt(eps).
CouponBounds partial_collection_bounds(const std::vector<double>& p, std::size_t m, std::size_t c,
                                       CouponOptions options = {});

}  // namespace goex
