#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "nls4/types.hpp"

namespace nls4 {

/// Gauss-Legendre rule on [0, 1]: nodes ascending, weights summing to 1.
template <typename Real>
struct GaussRule {
  RealVector<Real> nodes;
  RealVector<Real> weights;
};

template <typename Real>
GaussRule<Real> gauss_legendre_unit(int points) {
  if (points < 1) throw PreconditionError("gauss_legendre_unit: need at least one point");
  GaussRule<Real> rule{RealVector<Real>(points), RealVector<Real>(points)};
  const Real pi = std::numbers::pi_v<Real>;
  for (int i = 0; i < points; ++i) {
    // Newton on P_m starting from the Tricomi estimate of the (m - i)-th root.
    Real x = std::cos(pi * (Real(i) + Real(0.75)) / (Real(points) + Real(0.5)));
    Real dp = 0;
    for (int it = 0; it < 100; ++it) {
      Real p0 = 1, p1 = x;
      for (int k = 2; k <= points; ++k) {
        const Real p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = points * (x * p1 - p0) / (x * x - 1);
      const Real dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) <= 4 * std::numeric_limits<Real>::epsilon()) break;
    }
    // roots come out descending in x; map to ascending on [0, 1]
    const Index slot = points - 1 - i;
    rule.nodes[slot] = (x + 1) / 2;
    rule.weights[slot] = Real(1) / ((1 - x * x) * dp * dp);
  }
  return rule;
}

}  // namespace nls4
