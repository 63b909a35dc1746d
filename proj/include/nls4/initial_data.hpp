#pragma once

// Initial data used by the experiments.

#include <cmath>
#include <cstdint>
#include <random>

#include "nls4/nls_solver.hpp"

namespace nls4 {

/// A exp(-r^2 / width^2 - i chirp r^2).
template <typename Real>
RadialField<Real> gaussian_field(const GridPtr<Real>& grid, Real amplitude, Real width, Real chirp = 0) {
  return RadialField<Real>::sample(grid, [=](Real r) {
    return amplitude * std::exp(-r * r / (width * width)) * std::polar(Real(1), -chirp * r * r);
  });
}

/// Smooth bump: 1 at 0, exp(1 - 1/(1 - y^2)) for |y| < 1, 0 beyond.
template <typename Real>
Real bump_cutoff(Real y) {
  const Real a = std::abs(y);
  if (a >= 1) return 0;
  return std::exp(1 - 1 / (1 - a * a));
}

/// Projects u onto the free modes with frequency xi = mu^{1/4} below xi_max
/// using a smooth cutoff, and multiplies mode k by xi_k^power.
template <typename Real>
RadialField<Real> band_limit(const SpectralOperator<Real>& op_free, const RadialField<Real>& u, Real xi_max,
                             int power = 0) {
  if (op_free.kind() != OperatorKind::free) throw PreconditionError("band_limit: needs the free operator");
  if (!(xi_max > 0)) throw PreconditionError("band_limit: cutoff frequency must be positive");
  return op_free.apply_multiplier(
      [=](Real mu) {
        const Real xi = std::pow(std::max(mu, Real(0)), Real(0.25));
        return bump_cutoff(xi / xi_max) * std::pow(xi, Real(power));
      },
      u);
}

/// Seeded superposition of the lowest eigenmodes of op, unit L^2 norm.
template <typename Real>
RadialField<Real> random_modes(const SpectralOperator<Real>& op, std::uint64_t seed, int modes = 10) {
  if (modes < 1 || modes > op.size()) throw PreconditionError("random_modes: bad mode count");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexVector<Real> c = ComplexVector<Real>::Zero(op.size());
  for (int k = 0; k < modes; ++k) {
    const double re = normal(rng);
    const double im = normal(rng);
    c[k] = Complex<Real>(Real(re), Real(im));
  }
  c /= c.norm();
  return RadialField<Real>(op.grid_ptr(), op.from_spectral(c));
}

/// Rescales u so that ||Delta u||^2 equals the target.
template <typename Real>
RadialField<Real> with_h2dot(const RadialField<Real>& u, Real target) {
  const Real now = h2dot(u);
  if (!(now > 0)) throw PreconditionError("with_h2dot: field has zero Delta");
  return std::sqrt(target / now) * u;
}

}  // namespace nls4
