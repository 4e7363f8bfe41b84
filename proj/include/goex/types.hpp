#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace goex {

/// Every built-in space stores its states as a numeric vector: reals for R^N,
/// integral reals for Z^N and 0/1 entries for F_2^N.
using State = std::vector<double>;

using Rng = std::mt19937_64;

using Dissimilarity = std::function<double(const State&, const State&)>;
using GlobalGenerator = std::function<State(Rng&)>;
using LocalGenerator = std::function<State(const State&, double, Rng&)>;
using Objective = std::function<double(const State&)>;

inline constexpr double kEps = std::numeric_limits<double>::epsilon();
inline const double kSqrtEps = std::sqrt(kEps);

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DuplicateStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonLocalizingGeneratorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace goex
