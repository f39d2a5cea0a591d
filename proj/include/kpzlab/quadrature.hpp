#pragma once

#include <boost/math/special_functions/legendre.hpp>

#include <cstddef>
#include <vector>

namespace kpzlab {

/// Gauss-Legendre rule with runtime order, mapped to [a, b].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussRule gauss_legendre(unsigned order, double a, double b) {
  // legendre_p_zeros returns the non-negative half of the roots.
  const std::vector<double> half = boost::math::legendre_p_zeros<double>(static_cast<int>(order));
  GaussRule rule;
  rule.nodes.reserve(order);
  rule.weights.reserve(order);
  const double mid = 0.5 * (a + b);
  const double scale = 0.5 * (b - a);
  auto push = [&](double x) {
    const double dp = boost::math::legendre_p_prime(static_cast<int>(order), x);
    rule.nodes.push_back(mid + scale * x);
    rule.weights.push_back(scale * 2.0 / ((1.0 - x * x) * dp * dp));
  };
  for (double x : half) {
    if (x == 0.0) {
      push(0.0);
      continue;
    }
    push(x);
    push(-x);
  }
  return rule;
}

}  // namespace kpzlab
