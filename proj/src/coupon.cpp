#include "goex/coupon.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "goex/types.hpp"

namespace goex {

namespace {

using Real = long double;

struct Normalized {
  std::vector<double> p;
  bool renormalized = false;
};

Normalized normalize(const std::vector<double>& p) {
  if (p.empty()) throw std::invalid_argument("empty distribution");
  double total = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("p not finite and nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > kSqrtEps) throw std::invalid_argument("p does not sum to 1");
  Normalized out{p, total != 1.0};
  if (out.renormalized) {
    for (double& v : out.p) v /= total;
  }
  return out;
}

std::size_t support_size(const std::vector<double>& p) {
  return static_cast<std::size_t>(std::count_if(p.begin(), p.end(), [](double v) { return v > 0.0; }));
}

// Binomial coefficient through log-gamma; 0 outside the valid range.
Real binomial(long n, long k) {
  if (k < 0 || n < 0 || k > n) return 0.0L;
  return std::exp(std::lgamma(static_cast<Real>(n) + 1) - std::lgamma(static_cast<Real>(k) + 1) -
                  std::lgamma(static_cast<Real>(n - k) + 1));
}

Real alternating_coefficient(std::size_t n, std::size_t m, std::size_t ell) {
  const Real c = binomial(static_cast<long>(n - ell - 1), static_cast<long>(n - m));
  return ((m - 1 - ell) % 2 == 0) ? c : -c;
}

double exact_sum(const std::vector<double>& p, std::size_t m) {
  const std::size_t n = p.size();
  const std::uint32_t count = std::uint32_t{1} << n;
  std::vector<Real> mass(count, 0.0L);
  std::vector<Real> by_size(m, 0.0L);
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    if (mask != 0) {
      const int low = std::countr_zero(mask);
      mass[mask] = mass[mask & (mask - 1)] + static_cast<Real>(p[low]);
    }
    const auto size = static_cast<std::size_t>(std::popcount(mask));
    if (size < m) by_size[size] += 1.0L / (1.0L - mass[mask]);
  }
  Real acc = 0.0L;
  for (std::size_t ell = 0; ell < m; ++ell) acc += alternating_coefficient(n, m, ell) * by_size[ell];
  return static_cast<double>(acc);
}

double full_integral(const std::vector<double>& p) {
  auto integrand = [&](double t) {
    double prod = 1.0;
    for (double pk : p) prod *= 1.0 - std::exp(-pk * t);
    return 1.0 - prod;
  };
  double upper = 1.0;
  while (integrand(upper) > kEps) upper *= 10.0;
  constexpr int kNodes = 10000;
  const double h = upper / (kNodes - 1);
  double acc = 0.5 * (integrand(0.0) + integrand(upper));
  for (int i = 1; i < kNodes - 1; ++i) acc += integrand(h * i);
  return acc * h;
}

// Shared skeleton of the cutoff and deviation bounds: for each subset size
// ell, enumerate subsets M of the first lambda = min(c, ell) types and add
// binom(n - lambda, ell - mu) / denominator for the two tail choices.
using DenominatorPair = std::function<std::pair<Real, Real>(std::size_t ell, std::size_t mu,
                                                             std::uint32_t mask)>;

std::pair<double, double> partition_bounds(std::size_t n, std::size_t m, std::size_t c,
                                           const DenominatorPair& denominators) {
  Real lower = 0.0L;
  Real upper = 0.0L;
  Real magnitude = 0.0L;
  for (std::size_t ell = 0; ell < m; ++ell) {
    const std::size_t lambda = std::min(c, ell);
    Real sum_a = 0.0L;
    Real sum_b = 0.0L;
    const std::uint32_t count = std::uint32_t{1} << lambda;
    for (std::uint32_t mask = 0; mask < count; ++mask) {
      const auto mu = static_cast<std::size_t>(std::popcount(mask));
      if (mu > ell || ell - mu > n - lambda) continue;
      const Real numer = binomial(static_cast<long>(n - lambda), static_cast<long>(ell - mu));
      const auto [da, db] = denominators(ell, mu, mask);
      sum_a += numer / da;
      sum_b += numer / db;
    }
    const Real coeff = alternating_coefficient(n, m, ell);
    lower += std::min(coeff * sum_a, coeff * sum_b);
    upper += std::max(coeff * sum_a, coeff * sum_b);
    magnitude += std::abs(coeff) * std::max(sum_a, sum_b);
  }
  // The alternating sum cancels catastrophically for large n; a bound whose
  // rounding error could exceed a millionth of its value is dropped.
  const Real rounding = magnitude * std::numeric_limits<Real>::epsilon() * static_cast<Real>(4 * n);
  if (rounding > 1e-6L * std::abs(lower)) return {0.0, std::numeric_limits<double>::infinity()};
  return {static_cast<double>(lower), static_cast<double>(upper)};
}

Real masked_sum(const std::vector<Real>& v, std::uint32_t mask) {
  Real acc = 0.0L;
  while (mask != 0) {
    acc += v[static_cast<std::size_t>(std::countr_zero(mask))];
    mask &= mask - 1;
  }
  return acc;
}

// Sum of v[first], ..., v[first + len - 1] via prefix sums.
Real range_sum(const std::vector<Real>& prefix, std::size_t first, std::size_t len) {
  return prefix[first + len] - prefix[first];
}

std::vector<Real> prefix_sums(const std::vector<Real>& v) {
  std::vector<Real> out(v.size() + 1, 0.0L);
  for (std::size_t i = 0; i < v.size(); ++i) out[i + 1] = out[i] + v[i];
  return out;
}

std::pair<double, double> cutoff_bounds(const std::vector<double>& sorted_desc, std::size_t m,
                                        std::size_t c) {
  const std::size_t n = sorted_desc.size();
  const std::vector<Real> p(sorted_desc.begin(), sorted_desc.end());
  const std::vector<Real> prefix = prefix_sums(p);
  return partition_bounds(n, m, c, [&](std::size_t ell, std::size_t mu, std::uint32_t mask) {
    const std::size_t lambda = std::min(c, ell);
    const std::size_t tail = ell - mu;
    const Real p_m = masked_sum(p, mask);
    // Lightest possible tail: the last `tail` types. Heaviest: the first
    // `tail` types after the leading block.
    const Real light = range_sum(prefix, n - tail, tail);
    const Real heavy = range_sum(prefix, std::min(lambda, n - tail), tail);
    return std::pair{1.0L - p_m - light, 1.0L - p_m - heavy};
  });
}

std::pair<double, double> deviation_bounds(const std::vector<double>& p, std::size_t m,
                                           std::size_t c) {
  const std::size_t n = p.size();
  const Real nn = static_cast<Real>(n);
  std::vector<Real> delta(n);
  for (std::size_t k = 0; k < n; ++k) delta[k] = nn * static_cast<Real>(p[k]) - 1.0L;
  std::stable_sort(delta.begin(), delta.end(),
                   [](Real a, Real b) { return std::abs(a) > std::abs(b); });
  std::vector<Real> magnitudes(n);
  for (std::size_t k = 0; k < n; ++k) magnitudes[k] = std::abs(delta[k]);
  const std::vector<Real> prefix = prefix_sums(magnitudes);
  const Real floor = static_cast<Real>(kEps);
  return partition_bounds(n, m, c, [&](std::size_t ell, std::size_t mu, std::uint32_t mask) {
    const std::size_t lambda = std::min(c, ell);
    const std::size_t tail = ell - mu;
    const Real delta_m = masked_sum(delta, mask);
    const Real spread = range_sum(prefix, std::min(lambda, n - tail), tail);
    const Real base = static_cast<Real>(ell) + delta_m;
    return std::pair{std::max(1.0L - (base + spread) / nn, floor),
                     std::max(1.0L - (base - spread) / nn, floor)};
  });
}

}  // namespace

double harmonic_lower_bound(std::size_t n, std::size_t m) {
  if (m > n) throw std::invalid_argument("m > n");
  Real acc = 0.0L;
  for (std::size_t k = n - m + 1; k <= n; ++k) acc += 1.0L / static_cast<Real>(k);
  return static_cast<double>(static_cast<Real>(n) * acc);
}

double expected_partial_exact(const std::vector<double>& p, std::size_t m) {
  const Normalized norm = normalize(p);
  if (norm.p.size() > kMaxExactTypes) throw std::invalid_argument("exact sum limited to n <= 16");
  if (m < 1) throw std::invalid_argument("m < 1");
  if (m > support_size(norm.p)) throw std::invalid_argument("m > nnz(p)");
  return exact_sum(norm.p, m);
}

double expected_full_integral(const std::vector<double>& p) {
  const Normalized norm = normalize(p);
  for (double v : norm.p) {
    if (!(v > 0.0)) throw std::invalid_argument("full collection needs strictly positive p");
  }
  return full_integral(norm.p);
}

CouponBounds partial_collection_bounds(const std::vector<double>& p_in, std::size_t m,
                                       std::size_t c, CouponOptions options) {
  Normalized norm = normalize(p_in);
  if (m < 1) throw std::invalid_argument("m < 1");
  if (c < 1) throw std::invalid_argument("c < 1");
  if (m > support_size(norm.p)) throw std::invalid_argument("m > nnz(p)");

  CouponBounds out;
  out.normalized = norm.renormalized;
  if (m == 1) {
    out.exact = out.lower = out.upper = 1.0;
    return out;
  }

  std::vector<double> p = std::move(norm.p);
  std::sort(p.begin(), p.end(), std::greater<>());
  const std::size_t n = p.size();

  if (n <= kMaxExactTypes) {
    out.exact = exact_sum(p, m);
    if (options.exact_as_bounds) {
      out.lower = out.upper = *out.exact;
      return out;
    }
  }

  // Zero-probability types are never drawn, so collecting the whole support
  // bounds collecting any m of it.
  const std::vector<double> support(p.begin(), p.begin() + static_cast<long>(support_size(p)));
  const double total = full_integral(support);
  out.lower = 0.0;
  out.upper = total;
  if (m == n) {
    if (!out.exact) out.exact = total;
    if (options.exact_as_bounds) {
      out.lower = out.upper = total;
      return out;
    }
  }

  if (c <= kMaxCutoff) {
    const auto [lb_cut, ub_cut] = cutoff_bounds(p, m, c);
    out.lower = std::max(out.lower, lb_cut);
    out.upper = std::min(out.upper, ub_cut);
    const auto [lb_dev, ub_dev] = deviation_bounds(p, m, c);
    out.lower = std::max(out.lower, lb_dev);
    out.upper = std::min(out.upper, ub_dev);
  }
  out.lower = std::max(out.lower, harmonic_lower_bound(n, m));
  return out;
}

}  // namespace goex
