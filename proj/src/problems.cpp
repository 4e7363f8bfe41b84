#include "goex/problems.hpp"

#include <memory>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace goex {

double rastrigin(std::span<const double> x, double a) {
  double acc = a * static_cast<double>(x.size());
  for (double v : x) acc += v * v - a * std::cos(2.0 * std::numbers::pi * v);
  return acc;
}

double integer_rastrigin(std::span<const double> x, int lambda, double a) {
  if (lambda < 1) throw std::invalid_argument("lattice scale must be >= 1");
  std::vector<double> scaled(x.begin(), x.end());
  for (double& v : scaled) v /= lambda;
  return rastrigin(scaled, a);
}

SkInstance SkInstance::random(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SkInstance inst;
  inst.n = n;
  inst.couplings = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < inst.couplings.rows(); ++j) {
    for (Eigen::Index k = j + 1; k < inst.couplings.cols(); ++k) {
      inst.couplings(j, k) = inst.couplings(k, j) = normal(rng);
    }
  }
  return inst;
}

namespace {

void require_spins(std::span<const double> s) {
  for (double v : s) {
    if (v != 1.0 && v != -1.0) throw std::invalid_argument("spin entries must be +1 or -1");
  }
}

}  // namespace

double sk_energy(const SkInstance& inst, std::span<const double> spins) {
  if (spins.size() != inst.n) throw std::invalid_argument("spin count mismatch");
  require_spins(spins);
  const Eigen::Map<const Eigen::VectorXd> s(spins.data(), static_cast<Eigen::Index>(spins.size()));
  return s.dot(inst.couplings * s) / std::sqrt(static_cast<double>(inst.n));
}

double labs_energy(std::span<const double> spins) {
  require_spins(spins);
  const std::size_t n = spins.size();
  double acc = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    double r = 0.0;
    for (std::size_t j = 0; j + k < n; ++j) r += spins[j] * spins[j + k];
    acc += r * r;
  }
  return acc;
}

std::vector<double> bits_to_spins(std::span<const double> bits) {
  std::vector<double> s(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != 0.0 && bits[i] != 1.0) throw std::invalid_argument("bit entries must be 0 or 1");
    s[i] = 2.0 * bits[i] - 1.0;
  }
  return s;
}

double euclidean_distance(const State& a, const State& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

double binary_dissimilarity(const State& a, const State& b) {
  if (a.size() != b.size()) throw std::invalid_argument("length mismatch");
  std::size_t differ = 0;
  for (std::size_t i = 0; i < a.size(); ++i) differ += a[i] != b[i];
  return std::sqrt(static_cast<double>(differ));
}

State gaussian_local(const State& x, double theta, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  State out = x;
  for (double& v : out) v += theta * normal(rng);
  return out;
}

State rounded_gaussian_local(const State& x, double theta, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  State out = x;
  for (double& v : out) {
    const double step = theta * normal(rng);
    v += std::copysign(std::ceil(std::abs(step)), step);
  }
  return out;
}

double bernoulli_flip_rate(double theta, std::size_t n) {
  return std::min(theta * theta / static_cast<double>(n), 1.0);
}

State bernoulli_flip_local(const State& bits, double theta, Rng& rng) {
  const double rate = bernoulli_flip_rate(theta, bits.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  State out = bits;
  for (double& b : out) {
    if (unit(rng) < rate) b = 1.0 - b;
  }
  return out;
}

int hamming_figure_of_merit(std::uint64_t num_elites, int n) {
  if (num_elites < 1 || n < 1) throw std::invalid_argument("need num_elites >= 1 and N >= 1");
  const long double space = std::ldexp(1.0L, n);
  const auto elites = static_cast<long double>(num_elites);
  if (elites > space) throw std::invalid_argument("more elites than points in F_2^N");
  long double ball = 0.0L;
  long double binom = 1.0L;
  int best = 0;
  for (int r = 0; r <= n; ++r) {
    ball += binom;
    if (elites * ball > space) break;
    best = r;
    binom = binom * static_cast<long double>(n - r) / static_cast<long double>(r + 1);
  }
  return best;
}

namespace {

GlobalGenerator uniform_box(int dim, double lo, double hi) {
  return [=](Rng& rng) {
    std::uniform_real_distribution<double> unit(lo, hi);
    State x(static_cast<std::size_t>(dim));
    for (double& v : x) v = unit(rng);
    return x;
  };
}

GlobalGenerator uniform_lattice(int dim, long lo, long hi) {
  return [=](Rng& rng) {
    std::uniform_int_distribution<long> pick(lo, hi);
    State x(static_cast<std::size_t>(dim));
    for (double& v : x) v = static_cast<double>(pick(rng));
    return x;
  };
}

GlobalGenerator uniform_bits(int dim) {
  return [=](Rng& rng) {
    std::uniform_int_distribution<int> bit(0, 1);
    State x(static_cast<std::size_t>(dim));
    for (double& v : x) v = bit(rng);
    return x;
  };
}

std::vector<double> identity_encoding(const State& x) { return x; }

}  // namespace

ProblemDefinition make_problem(const ProblemParams& params) {
  if (params.dimension < 1) throw std::invalid_argument("dimension must be >= 1");
  if (!(params.domain_lo < params.domain_hi)) throw std::invalid_argument("empty domain box");
  ProblemDefinition p;
  p.name = params.name;
  p.encode = identity_encoding;
  p.euclidean = true;
  const double a = params.amplitude;
  if (params.name == "rastrigin") {
    p.objective = [a](const State& x) { return rastrigin(x, a); };
    p.dissimilarity = euclidean_distance;
    p.global_generator = uniform_box(params.dimension, params.domain_lo, params.domain_hi);
    p.local_generator = gaussian_local;
  } else if (params.name == "int-rastrigin") {
    const int lambda = params.lambda;
    if (lambda < 1) throw std::invalid_argument("lambda must be >= 1");
    p.objective = [a, lambda](const State& x) { return integer_rastrigin(x, lambda, a); };
    p.dissimilarity = euclidean_distance;
    p.global_generator =
        uniform_lattice(params.dimension, std::lround(std::ceil(params.domain_lo * lambda)),
                        std::lround(std::floor(params.domain_hi * lambda)));
    p.local_generator = rounded_gaussian_local;
  } else if (params.name == "sk") {
    auto inst = std::make_shared<const SkInstance>(
        SkInstance::random(static_cast<std::size_t>(params.dimension), params.instance_seed));
    p.objective = [inst](const State& b) { return sk_energy(*inst, bits_to_spins(b)); };
    p.dissimilarity = binary_dissimilarity;
    p.global_generator = uniform_bits(params.dimension);
    p.local_generator = bernoulli_flip_local;
  } else if (params.name == "labs") {
    if (params.dimension < 2) throw std::invalid_argument("LABS needs N >= 2");
    p.objective = [](const State& b) { return labs_energy(bits_to_spins(b)); };
    p.dissimilarity = binary_dissimilarity;
    p.global_generator = uniform_bits(params.dimension);
    p.local_generator = bernoulli_flip_local;
  } else {
    throw std::invalid_argument("unknown problem '" + params.name + "'");
  }
  return p;
}

std::vector<std::string> problem_names() { return {"rastrigin", "int-rastrigin", "sk", "labs"}; }

}  // namespace goex
