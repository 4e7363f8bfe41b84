#pragma once

// Built-in search spaces and objectives: Rastrigin on R^N and on a scaled
// integer lattice, the Sherrington-Kirkpatrick spin glass and the Bernasconi
// (LABS) energy on F_2^N.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "goex/types.hpp"

namespace goex {

struct ProblemDefinition {
  std::string name;
  Objective objective;
  Dissimilarity dissimilarity;
  GlobalGenerator global_generator;
  LocalGenerator local_generator;
  // Numeric encoding fed to the surrogate.
  std::function<std::vector<double>(const State&)> encode;
  // The dissimilarity is a Euclidean distance on `encode`, so exp(-t d) is
  // positive definite at every scale.
  bool euclidean = false;
};

double rastrigin(std::span<const double> x, double a = 10.0);
double integer_rastrigin(std::span<const double> x, int lambda, double a = 10.0);

struct SkInstance {
  std::size_t n = 0;
  Eigen::MatrixXd couplings;  // symmetric, zero diagonal

  /// Upper-triangle couplings drawn IID N(0,1) from `seed`, then mirrored.
  static SkInstance random(std::size_t n, std::uint64_t seed);
};

/// (1/sqrt N) sum_{j,k} J_jk s_j s_k for spins s in {-1,+1}^N.
double sk_energy(const SkInstance& inst, std::span<const double> spins);

/// sum_{k=1}^{N-1} R_k(s)^2 with aperiodic autocorrelations R_k.
double labs_energy(std::span<const double> spins);

/// Maps 0/1 bits to -1/+1 spins.
std::vector<double> bits_to_spins(std::span<const double> bits);

double euclidean_distance(const State& a, const State& b);

/// Square root of the Hamming distance between 0/1 vectors.
double binary_dissimilarity(const State& a, const State& b);

State gaussian_local(const State& x, double theta, Rng& rng);
/// Adds per-coordinate N(0, theta^2) steps rounded away from zero.
State rounded_gaussian_local(const State& x, double theta, Rng& rng);
/// Flips each bit independently with probability min(theta^2 / N, 1).
State bernoulli_flip_local(const State& bits, double theta, Rng& rng);

double bernoulli_flip_rate(double theta, std::size_t n);

/// Largest Hamming radius r with num_elites <= 2^N / sum_{k<=r} C(N, k).
int hamming_figure_of_merit(std::uint64_t num_elites, int n);

struct ProblemParams {
  std::string name = "rastrigin";
  int dimension = 2;
  int lambda = 100;
  double amplitude = 10.0;
  double domain_lo = -2.0;
  double domain_hi = 3.0;
  std::uint64_t instance_seed = 0;
};

/// Registry keyed by "rastrigin", "int-rastrigin", "sk" and "labs".
ProblemDefinition make_problem(const ProblemParams& params);

std::vector<std::string> problem_names();

}  // namespace goex
