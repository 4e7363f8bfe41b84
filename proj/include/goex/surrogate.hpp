#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace goex {

/// Parameter-free linear radial basis interpolant phi(q) = sum_i c_i |q - x_i|.
class RbfInterpolant {
 public:
  /// Fits on `nodes` / `values`. Exact duplicate nodes are dropped (the first
  /// occurrence wins). A single node yields the constant interpolant. A
  /// rank-deficient system falls back to least squares.
  static RbfInterpolant fit(std::span<const std::vector<double>> nodes, std::span<const double> values);

  double operator()(std::span<const double> q) const;

  std::size_t size() const { return nodes_.size(); }
  std::size_t dimension() const { return dim_; }
  const Eigen::VectorXd& coefficients() const { return coefficients_; }

 private:
  std::vector<Eigen::VectorXd> nodes_;
  Eigen::VectorXd coefficients_;
  double constant_ = 0.0;
  std::size_t dim_ = 0;
};

}  // namespace goex
