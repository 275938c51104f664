#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace skmom {

/// Nodes and weights for integral f(x) exp(-x^2) dx ~ sum_i w_i f(x_i).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  /// E f(Z) for Z ~ N(0,1), i.e. pi^{-1/2} sum_i w_i f(sqrt(2) x_i).
  template <class F>
  double expectation(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(std::numbers::sqrt2 * nodes[i]);
    return s / std::sqrt(std::numbers::pi);
  }
};

/// Roots of H_n by Newton iteration on the orthonormal Hermite recurrence,
/// seeded with the usual asymptotic guesses (largest root first).
inline GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: need at least one node");
  constexpr double kEps = 1e-15;
  const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
  GaussHermiteRule rule;
  rule.nodes.assign(static_cast<std::size_t>(n), 0.0);
  rule.weights.assign(static_cast<std::size_t>(n), 0.0);
  const int half = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < half; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * rule.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * rule.nodes[1];
    } else {
      z = 2.0 * z - rule.nodes[static_cast<std::size_t>(i - 2)];
    }
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4;
      double p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt(static_cast<double>(j - 1) / j) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= kEps * std::max(1.0, std::abs(z))) break;
    }
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = z;
    rule.nodes[hi] = -z;
    rule.weights[lo] = 2.0 / (pp * pp);
    rule.weights[hi] = rule.weights[lo];
  }
  return rule;
}

}  // namespace skmom
