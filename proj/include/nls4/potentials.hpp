#pragma once

// Radial potential families and the compliance checks run against them.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include "nls4/radial_domain.hpp"

namespace nls4 {

enum class PotentialFamily { zero, inverse_bracket, gaussian_bump };

std::string to_string(PotentialFamily family);
PotentialFamily parse_potential_family(const std::string& name);

/// V(r) = c <r>^{-beta} (inverse_bracket), c exp(-a r^2) (gaussian_bump) or 0.
struct PotentialSpec {
  PotentialFamily family = PotentialFamily::zero;
  double c = 0;
  double beta = 0;
  double a = 0;
  int dimension = 5;

  static PotentialSpec zero(int n) { return {PotentialFamily::zero, 0, 0, 0, n}; }
  static PotentialSpec inverse_bracket(int n, double c, double beta) {
    return {PotentialFamily::inverse_bracket, c, beta, 0, n};
  }
  static PotentialSpec gaussian_bump(int n, double c, double a) {
    return {PotentialFamily::gaussian_bump, c, 0, a, n};
  }

  /// Throws PreconditionError on nonsensical coefficients.
  void validate() const;

  /// Pointwise value and radial derivative; both analytic.
  double value(double r) const;
  double derivative(double r) const;

  /// Rate of polynomial decay (infinity for the Gaussian and zero families).
  double decay_exponent() const;

  /// FNV-1a hash of the family and coefficients; keys the eigen cache.
  std::uint64_t hash() const;
};

/// Exponent of <x> that Assumption-style decay demands: n + 3 for odd n and
/// n + 4 for even n (strict inequality).
inline double required_decay_exponent(int n) { return n % 2 ? n + 3.0 : n + 4.0; }

template <typename Real>
RealVector<Real> potential_values(const PotentialSpec& spec, const RadialGrid<Real>& grid) {
  if (spec.dimension != grid.dimension())
    throw GridMismatchError("evaluate_potential: potential dimension " +
                            std::to_string(spec.dimension) + " differs from grid dimension " +
                            std::to_string(grid.dimension()));
  spec.validate();
  RealVector<Real> v(grid.size());
  for (Index j = 0; j < v.size(); ++j) v[j] = Real(spec.value(double(grid.nodes()[j])));
  return v;
}

template <typename Real>
RadialField<Real> evaluate_potential(const PotentialSpec& spec, const GridPtr<Real>& grid) {
  return RadialField<Real>(grid, potential_values(spec, *grid).template cast<Complex<Real>>());
}

struct AssumptionReport {
  // decay: sup <r>^{beta_req + eps} |V|
  bool decay_ok = true;
  double decay_exponent_required = 0;
  double decay_sup = 0;
  // repulsive: max r V'(r)
  bool repulsive_ok = true;
  double repulsive_max = 0;
  // |V| <= C0 <r>^{-4}, |V'| <= C1 <r>^{-5}
  bool derivative_bound_ok = true;
  double c0 = 0;
  double c1 = 0;
  bool nonneg_ok = true;
  double min_value = 0;
  bool weak_norm_ok = true;
  double weak_norm_value = 0;
  double delta_n = 0.05;
  std::string fourier_condition = "unchecked";

  bool all_ok() const {
    return decay_ok && repulsive_ok && derivative_bound_ok && nonneg_ok && weak_norm_ok;
  }
};

template <typename Real>
AssumptionReport check_assumptions(const PotentialSpec& spec, const RadialGrid<Real>& grid,
                                   double delta_n = 0.05) {
  AssumptionReport rep;
  rep.delta_n = delta_n;
  const int n = grid.dimension();
  rep.decay_exponent_required = required_decay_exponent(n);
  const double probe = rep.decay_exponent_required + 1e-3;

  RealVector<Real> modulus(grid.size());
  double min_v = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < grid.size(); ++j) {
    const double r = double(grid.nodes()[j]);
    const double bracket = std::sqrt(1 + r * r);
    const double v = spec.value(r);
    const double dv = spec.derivative(r);
    modulus[j] = Real(std::abs(v));
    min_v = std::min(min_v, v);
    rep.decay_sup = std::max(rep.decay_sup, std::pow(bracket, probe) * std::abs(v));
    rep.repulsive_max = std::max(rep.repulsive_max, r * dv);
    rep.c0 = std::max(rep.c0, std::pow(bracket, 4) * std::abs(v));
    rep.c1 = std::max(rep.c1, std::pow(bracket, 5) * std::abs(dv));
  }
  // r = 0 is not a node but the sups above all include it by continuity
  rep.decay_sup = std::max(rep.decay_sup, std::abs(spec.value(0)));
  rep.c0 = std::max(rep.c0, std::abs(spec.value(0)));
  rep.min_value = std::min(min_v, spec.value(0));

  const double decay = spec.decay_exponent();
  rep.decay_ok = decay > rep.decay_exponent_required && std::isfinite(rep.decay_sup);
  rep.repulsive_ok = rep.repulsive_max <= 0;
  rep.derivative_bound_ok = decay >= 4 && std::isfinite(rep.c0) && std::isfinite(rep.c1);
  rep.nonneg_ok = rep.min_value >= 0;
  rep.weak_norm_value = double(weak_lp_norm(grid, modulus, Real(n) / 4));
  rep.weak_norm_ok = rep.weak_norm_value <= delta_n;
  return rep;
}

}  // namespace nls4
