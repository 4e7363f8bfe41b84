#include "goex/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace goex {

RbfInterpolant RbfInterpolant::fit(std::span<const std::vector<double>> nodes,
                                   std::span<const double> values) {
  if (nodes.size() != values.size()) throw std::invalid_argument("node and value counts differ");
  if (nodes.empty()) throw std::invalid_argument("no interpolation nodes");

  RbfInterpolant out;
  out.dim_ = nodes.front().size();
  std::vector<double> y;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& x = nodes[i];
    if (x.size() != out.dim_) throw std::invalid_argument("node dimension mismatch");
    if (!std::isfinite(values[i]) || !std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); })) {
      throw std::invalid_argument("non-finite interpolation data");
    }
    const auto seen = std::find(nodes.begin(), nodes.begin() + static_cast<long>(i), x);
    if (seen != nodes.begin() + static_cast<long>(i)) continue;
    out.nodes_.push_back(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
    y.push_back(values[i]);
  }

  const auto n = static_cast<Eigen::Index>(out.nodes_.size());
  if (n == 1) {
    out.coefficients_ = Eigen::VectorXd::Zero(1);
    out.constant_ = y.front();
    return out;
  }
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) a(i, j) = a(j, i) = (out.nodes_[i] - out.nodes_[j]).norm();
  }
  const Eigen::Map<const Eigen::VectorXd> rhs(y.data(), n);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (lu.isInvertible()) {
    out.coefficients_ = lu.solve(rhs);
  } else {
    out.coefficients_ = a.completeOrthogonalDecomposition().solve(rhs);
  }
  return out;
}

double RbfInterpolant::operator()(std::span<const double> q) const {
  if (q.size() != dim_) throw std::invalid_argument("query dimension mismatch");
  const Eigen::Map<const Eigen::VectorXd> point(q.data(), static_cast<Eigen::Index>(q.size()));
  double acc = constant_;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    acc += coefficients_[static_cast<Eigen::Index>(i)] * (point - nodes_[i]).norm();
  }
  return acc;
}

}  // namespace goex
